use num_complex::Complex64;
use num_rational::BigRational;
use poincare_core::asymptotics::{extract_f, fourier_coeffs};
use poincare_core::boettcher_green::green;
use poincare_core::exact::{format_rational, parse_rational};
use poincare_core::harmonic_measure::Preimages;
use poincare_core::poincare_series::{evaluate, formal_residual_vanishes, solve_taylor};
use poincare_core::poly_core::{normalize, normalize_exact, real_julia_interval, RealPolynomial};
use poincare_core::zeros_zeta::find_real_zeros;
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn quad(c: f64) -> poincare_core::NormalizedSystem {
    normalize(
        &RealPolynomial::from_f64(&[0.0, c, 1.0]).unwrap(),
        Complex64::new(0.0, 0.0),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_text_roundtrip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn normalization_roundtrip(a in 1i64..6, m in 2i64..9, xi in -3i64..4, neg in any::<bool>()) {
        // p(z) = a (z - ξ)^2 + μ (z - ξ) + ξ has the repelling fixed point ξ with multiplier μ.
        let mu = if neg { -m } else { m };
        let (a, mu, x) = (rat(a, 1), rat(mu, 1), rat(xi, 1));
        let c0 = a.clone() * x.clone() * x.clone() - mu.clone() * x.clone() + x.clone();
        let c1 = mu.clone() - rat(2, 1) * a.clone() * x.clone();
        let p = RealPolynomial::new(vec![c0, c1, a]).unwrap();
        if neg {
            // Negative multipliers have no real Poincaré function with λ > 1.
            prop_assert!(normalize_exact(&p, &x).is_err());
            return Ok(());
        }
        let sys = normalize_exact(&p, &x).unwrap();
        prop_assert_eq!(sys.lambda_exact().clone(), mu);
        prop_assert_eq!(sys.poly.coeffs()[0].clone(), rat(0, 1));
        prop_assert_eq!(sys.poly.coeffs()[2].clone(), rat(1, 1));
        prop_assert_eq!(sys.denormalize().unwrap(), p);
    }

    #[test]
    fn formal_identity_exact(num in 3i64..40, den in 1i64..5) {
        prop_assume!(num > 2 * den);
        let p = RealPolynomial::new(vec![rat(0, 1), rat(num, 2 * den), rat(1, 1)]).unwrap();
        let sys = normalize_exact(&p, &rat(0, 1)).unwrap();
        let ser = solve_taylor(&sys, 16).unwrap();
        prop_assert_eq!(formal_residual_vanishes(&sys, &ser), Some(true));
    }

    #[test]
    fn functional_equation_on_random_points(c in 1.5f64..8.0, r in 0.0f64..6.0, t in 0.0f64..std::f64::consts::TAU) {
        let sys = quad(c);
        let ser = solve_taylor(&sys, 64).unwrap();
        let z = Complex64::from_polar(r, t);
        let fz = evaluate(&sys, &ser, z).unwrap().value;
        let flz = evaluate(&sys, &ser, z * sys.lambda).unwrap().value;
        prop_assert!((flz - sys.p(fz)).norm() <= 1e-9 * flz.norm().max(1.0));
    }

    #[test]
    fn green_scales_by_degree(c in 1.5f64..8.0, r in 2.0f64..30.0, t in 0.0f64..std::f64::consts::TAU) {
        let sys = quad(c);
        let z = Complex64::from_polar(r, t);
        let g = green(&sys, z).unwrap();
        prop_assume!(g.escaped && g.abs_green > 1e-3);
        let gp = green(&sys, sys.p(z)).unwrap();
        prop_assert!((gp.abs_green - 2.0 * g.abs_green).abs() <= 1e-10 * gp.abs_green.max(1.0));
    }

    #[test]
    fn preimages_map_back(c in 1.5f64..8.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let sys = quad(c);
        let target = Complex64::new(x, y);
        for w in Preimages::new(&sys).all(target).unwrap() {
            prop_assert!((sys.p(w) - target).norm() <= 1e-10 * (1.0 + target.norm()));
        }
    }

    #[test]
    fn real_hull_is_backward_invariant(c in 4.0f64..9.0, t in 0.0f64..1.0) {
        let sys = quad(c);
        let geo = real_julia_interval(&sys).unwrap();
        let [a, b] = geo.hull.unwrap();
        let x = a + t * (b - a);
        for w in Preimages::new(&sys).all(Complex64::new(x, 0.0)).unwrap() {
            prop_assert!(w.im.abs() < 1e-9);
            prop_assert!(w.re >= a - 1e-9 && w.re <= b + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn fourier_coefficients_are_conjugate_symmetric(c in 4.5f64..8.0) {
        let sys = quad(c);
        let ser = solve_taylor(&sys, 64).unwrap();
        let prof = extract_f(&sys, &ser, 0.0, 2, 16).unwrap();
        let table = fourier_coeffs(&prof, sys.lambda, 3).unwrap();
        for k in 1..=3 {
            let a = table.get(k).unwrap();
            let b = table.get(-k).unwrap();
            prop_assert!((a.value - b.value.conj()).norm() <= 1e-12 + a.uncertainty);
        }
    }

    #[test]
    fn zero_sets_are_self_similar(c in 4.0f64..8.0) {
        let sys = quad(c);
        let ser = solve_taylor(&sys, 64).unwrap();
        let z = find_real_zeros(&sys, &ser, 3000.0).unwrap();
        prop_assert!(z.self_similar);
        prop_assert!(z.complete);
        prop_assert!(z.max_residual < 1e-8);
    }
}
