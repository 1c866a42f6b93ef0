//! Fixtures shared by the criterion benches.

use num_complex::Complex64;
use poincare_core::poly_core::normalize;
use poincare_core::{NormalizedSystem, RealPolynomial};

/// `z^2 + c z`, normalized at 0.
pub fn quadratic(c: f64) -> NormalizedSystem {
    let p = RealPolynomial::from_f64(&[0.0, c, 1.0]).expect("valid coefficients");
    normalize(&p, Complex64::new(0.0, 0.0)).expect("0 is repelling for c > 1")
}

/// Points on circles of radius 1..=r_max, `per_circle` to a circle.
pub fn ring_points(r_max: usize, per_circle: usize) -> Vec<Complex64> {
    (1..=r_max)
        .flat_map(|r| {
            (0..per_circle).map(move |j| {
                Complex64::from_polar(r as f64, std::f64::consts::TAU * j as f64 / per_circle as f64)
            })
        })
        .collect()
}
