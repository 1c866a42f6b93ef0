//! Taylor series of the Poincaré function and its evaluation by lifting
//! through the functional equation `f(λz) = p(f(z))`.

use crate::error::{CoreError, Result};
use crate::exact::{self, ln_abs, to_f64};
use crate::poly_core::NormalizedSystem;
use crate::series::{self, Coeff};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_ORDER: usize = 64;
/// Relative lift-consistency threshold for [`EvalResult::warning`].
pub const EVAL_TOL: f64 = 1e-9;
const OVERFLOW: f64 = 1e300;

/// Taylor data of `f` at 0: `a_0 = 0`, `a_1 = 1`, then `a_2..a_N`.
#[derive(Clone, Debug)]
pub struct PowerSeries {
    /// Exact coefficients; `None` once the bit budget was exceeded.
    pub exact: Option<Vec<BigRational>>,
    pub coeffs: Vec<f64>,
    /// `ln |a_n|`, computed from the exact values when available so that
    /// coefficients below the float range still carry magnitude information.
    pub log_abs: Vec<f64>,
    pub order: usize,
    pub r_conv: f64,
    /// Radius below which the truncated series is used directly.
    pub r_lift: f64,
    pub exact_degraded: bool,
}

impl PowerSeries {
    pub fn from_exact(exact: Vec<BigRational>) -> Self {
        let coeffs: Vec<f64> = exact.iter().map(to_f64).collect();
        let log_abs = exact.iter().map(ln_abs).collect();
        Self::assemble(Some(exact), coeffs, log_abs, false)
    }

    pub fn from_float(coeffs: Vec<f64>) -> Self {
        let log_abs = coeffs.iter().map(|c| c.abs().ln()).collect();
        Self::assemble(None, coeffs, log_abs, false)
    }

    fn assemble(
        exact: Option<Vec<BigRational>>,
        coeffs: Vec<f64>,
        log_abs: Vec<f64>,
        exact_degraded: bool,
    ) -> Self {
        let order = coeffs.len() - 1;
        let r_conv = ratio_radius(&log_abs);
        let r_lift = lift_radius(&log_abs, r_conv);
        Self {
            exact,
            coeffs,
            log_abs,
            order,
            r_conv,
            r_lift,
            exact_degraded,
        }
    }

    /// Truncated series value and derivative.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::zero();
        let mut dv = Complex64::zero();
        for &c in self.coeffs.iter().rev() {
            dv = dv * z + v;
            v = v * z + c;
        }
        (v, dv)
    }
}

/// `(|a_{N/2}| / |a_N|)^{2/N}` evaluated on log magnitudes.
fn ratio_radius(log_abs: &[f64]) -> f64 {
    let n = log_abs.len() - 1;
    let finite = |i: usize| (1..=i).rev().find(|&k| log_abs[k].is_finite());
    match (finite(n / 2), finite(n)) {
        (Some(lo), Some(hi)) if hi > lo => ((log_abs[lo] - log_abs[hi]) / (hi - lo) as f64).exp(),
        _ => f64::INFINITY,
    }
}

/// Largest radius where the neglected tail stays below `2^-60` and the
/// coefficient mass `Σ |a_n| r^n` stays below `10^3`.
fn lift_radius(log_abs: &[f64], r_conv: f64) -> f64 {
    let n = log_abs.len() - 1;
    let tail_eps = -60.0 * std::f64::consts::LN_2;
    let mut r_tail = f64::INFINITY;
    for (k, l) in log_abs.iter().enumerate().skip((n / 2 + 1).max(2)) {
        if l.is_finite() {
            r_tail = r_tail.min(((tail_eps - l) / k as f64).exp());
        }
    }
    let mass = |lr: f64| {
        log_abs
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_finite())
            .map(|(k, l)| (l + k as f64 * lr).exp())
            .sum::<f64>()
    };
    let (mut lo, mut hi) = ((1e-3f64).ln(), r_conv.min(1e12).ln());
    if mass(hi) <= 1e3 {
        lo = hi;
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) <= 1e3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    (0.5 * r_conv).min(r_tail).min(lo.exp())
}

/// Solves `a_n (λ^n - λ) = [z^n] Σ_{j≥2} p_j f^j` to order `order`.
pub fn solve_taylor(sys: &NormalizedSystem, order: usize) -> Result<PowerSeries> {
    if order < 2 {
        return Err(CoreError::InvalidInput("series order must be at least 2".into()));
    }
    if sys.lambda <= 1.0 {
        return Err(CoreError::InvalidInput("multiplier must exceed 1".into()));
    }
    let floats = recursion::<f64>(sys.poly.coeffs_f64(), &sys.lambda, order, None);
    let floats = floats.expect("float recursion has no budget");
    match recursion::<BigRational>(
        sys.poly.coeffs(),
        sys.lambda_exact(),
        order,
        Some(exact::BIT_BUDGET),
    ) {
        Some(exact) => Ok(PowerSeries::from_exact(exact)),
        None => {
            // Exact values up to the budget still give better magnitudes.
            let partial = recursion_partial(sys, order);
            let mut log_abs: Vec<f64> = floats.iter().map(|c| c.abs().ln()).collect();
            for (k, l) in partial.iter().enumerate() {
                log_abs[k] = *l;
            }
            Ok(PowerSeries::assemble(None, floats, log_abs, true))
        }
    }
}

fn recursion_partial(sys: &NormalizedSystem, order: usize) -> Vec<f64> {
    let mut last = Vec::new();
    let mut n = order;
    while n >= 2 {
        if let Some(c) =
            recursion::<BigRational>(sys.poly.coeffs(), sys.lambda_exact(), n, Some(exact::BIT_BUDGET))
        {
            last = c.iter().map(ln_abs).collect();
            break;
        }
        n = n * 3 / 4;
    }
    last
}

trait Budget {
    fn over(&self, bits: u64) -> bool;
}

impl Budget for f64 {
    fn over(&self, _: u64) -> bool {
        false
    }
}

impl Budget for BigRational {
    fn over(&self, limit: u64) -> bool {
        exact::bits(self) > limit
    }
}

fn recursion<T: Coeff + Budget>(p: &[T], lambda: &T, order: usize, budget: Option<u64>) -> Option<Vec<T>> {
    let d = p.len() - 1;
    let len = order + 1;
    // pow[j][n] = [z^n] f^j for j = 1..d
    let mut pow: Vec<Vec<T>> = vec![series::zeros(len); d + 1];
    pow[1][1] = T::one();
    // f^j starts at z^j with coefficient 1 since a_1 = 1.
    for (j, row) in pow.iter_mut().enumerate().take(len).skip(2) {
        row[j] = T::one();
    }
    let mut lam_n = lambda.clone();
    for n in 2..len {
        lam_n = lam_n * lambda.clone();
        for j in 2..=d.min(n) {
            if n == j {
                continue;
            }
            let mut acc = T::zero();
            for i in 1..=(n + 1 - j) {
                let a = &pow[1][i];
                if !a.is_zero() {
                    acc = acc + a.clone() * pow[j - 1][n - i].clone();
                }
            }
            pow[j][n] = acc;
        }
        let mut rhs = T::zero();
        for j in 2..=d.min(n) {
            rhs = rhs + p[j].clone() * pow[j][n].clone();
        }
        let a_n = rhs / (lam_n.clone() - lambda.clone());
        if let Some(limit) = budget {
            if a_n.over(limit) {
                return None;
            }
        }
        pow[1][n] = a_n;
    }
    Some(pow.swap_remove(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: Complex64,
    pub derivative: Complex64,
    pub lift_depth: u32,
    /// `|f_{m+1}(z) - f_m(z)|`: the functional-equation residual at `z/λ^{m+1}`
    /// transported to `z` by the lifts.
    pub residual: f64,
    pub relative_residual: f64,
    pub warning: bool,
}

/// Number of lifts needed to bring `z` inside the direct-evaluation disc.
pub fn lift_depth(sys: &NormalizedSystem, series: &PowerSeries, z: Complex64) -> u32 {
    let r = z.norm();
    if r <= series.r_lift {
        return 0;
    }
    ((r / series.r_lift).ln() / sys.lambda.ln()).ceil().max(0.0) as u32
}

/// `p^m(S(z / λ^m))` with its derivative.
pub fn evaluate_at_depth(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    z: Complex64,
    m: u32,
) -> Result<(Complex64, Complex64)> {
    let zeta = z / sys.lambda.powi(m as i32);
    let (mut w, ds) = series.eval(zeta);
    let mut dw = ds / sys.lambda.powi(m as i32);
    let coeffs = sys.poly.coeffs_c();
    for k in 0..m {
        let (pw, dpw) = crate::roots::eval_with_derivative(&coeffs, w);
        w = pw;
        dw *= dpw;
        if !(w.norm() < OVERFLOW) {
            return Err(CoreError::Overflow { lifts: k + 1 });
        }
    }
    Ok((w, dw))
}

pub fn evaluate(sys: &NormalizedSystem, series: &PowerSeries, z: Complex64) -> Result<EvalResult> {
    if z == Complex64::zero() {
        return Ok(EvalResult {
            value: z,
            derivative: Complex64::one(),
            lift_depth: 0,
            residual: 0.0,
            relative_residual: 0.0,
            warning: false,
        });
    }
    let m = lift_depth(sys, series, z);
    let (value, derivative) = evaluate_at_depth(sys, series, z, m)?;
    let residual = match evaluate_at_depth(sys, series, z, m + 1) {
        Ok((v, _)) => (v - value).norm(),
        Err(_) => f64::INFINITY,
    };
    let relative_residual = residual / value.norm().max(1.0);
    Ok(EvalResult {
        value,
        derivative,
        lift_depth: m,
        residual,
        relative_residual,
        warning: !(relative_residual < EVAL_TOL),
    })
}

/// Local inverse `g_loc` of `f` at 0 by formal reversion.
pub fn schroeder_inverse(series: &PowerSeries) -> PowerSeries {
    let len = series.order + 1;
    match &series.exact {
        Some(e) => PowerSeries::from_exact(series::reverse(e, len)),
        None => PowerSeries::from_float(series::reverse(&series.coeffs, len)),
    }
}

pub const CIRCLE_POINTS: usize = 1 << 10;

/// `M(r) = max_{|z| = r} |f(z)|` over a 1024-point circle grid; overflow counts as `+inf`.
pub fn max_modulus(sys: &NormalizedSystem, series: &PowerSeries, r: f64) -> f64 {
    (0..CIRCLE_POINTS)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_POINTS as f64;
            match evaluate(sys, series, Complex64::from_polar(r, t)) {
                Ok(e) => e.value.norm(),
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxModulusPoint {
    pub u: f64,
    pub r: f64,
    pub log_m: f64,
    /// `log M(r) / r^ρ`.
    pub normalized: f64,
}

/// Samples `u ↦ log M(λ^u r0) / (λ^u r0)^ρ` for `u` in `[0, periods)`.
pub fn max_modulus_profile(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    r0: f64,
    periods: usize,
    samples_per_period: usize,
) -> Vec<MaxModulusPoint> {
    (0..periods * samples_per_period)
        .map(|j| {
            let u = j as f64 / samples_per_period as f64;
            let r = r0 * sys.lambda.powf(u);
            let log_m = max_modulus(sys, series, r).ln();
            MaxModulusPoint {
                u,
                r,
                log_m,
                normalized: log_m / r.powf(sys.rho),
            }
        })
        .collect()
}

/// Exact check that `p(f(z)) - f(λz)` vanishes through `z^N`.
pub fn formal_residual_vanishes(sys: &NormalizedSystem, series: &PowerSeries) -> Option<bool> {
    let a = series.exact.as_ref()?;
    let len = a.len();
    let lhs = series::compose(sys.poly.coeffs(), a, len);
    let mut lam = BigRational::one();
    Some(a.iter().zip(lhs.iter()).all(|(an, ln)| {
        let ok = an.clone() * lam.clone() == *ln;
        lam = lam.clone() * sys.lambda_exact().clone();
        ok
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::{normalize, RealPolynomial};

    fn sys(c: &[i64]) -> NormalizedSystem {
        normalize(&RealPolynomial::from_integers(c).unwrap(), Complex64::zero()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn hand_recursion_values() {
        let s = solve_taylor(&sys(&[0, 5, 1]), 8).unwrap();
        let e = s.exact.unwrap();
        assert_eq!(e[2], q(1, 20));
        assert_eq!(e[3], q(1, 1200));
    }

    #[test]
    fn exponential_case() {
        let s = solve_taylor(&sys(&[0, 2, 1]), 20).unwrap();
        let e = s.exact.as_ref().unwrap();
        let mut fact = q(1, 1);
        for (n, c) in e.iter().enumerate().skip(1) {
            fact /= q(n as i64, 1);
            assert_eq!(*c, fact, "n = {n}");
        }
        let r = evaluate(&sys(&[0, 2, 1]), &s, Complex64::new(1.0, 0.0)).unwrap();
        assert!((r.value.re - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn formal_identity_holds() {
        let s5 = sys(&[0, 5, 1]);
        let ser = solve_taylor(&s5, 24).unwrap();
        assert_eq!(formal_residual_vanishes(&s5, &ser), Some(true));
    }

    #[test]
    fn budget_degrades_to_float() {
        let s5 = sys(&[0, 5, 1]);
        let ser = solve_taylor(&s5, 80).unwrap();
        assert!(ser.exact.is_none() && ser.exact_degraded);
        assert!(ser.log_abs[40].is_finite() && ser.log_abs[40] < -300.0);
        let r = evaluate(&s5, &ser, Complex64::new(3.0, 1.0)).unwrap();
        assert!(!r.warning, "{r:?}");
    }

    #[test]
    fn zero_is_trivial() {
        let s4 = sys(&[0, 4, 1]);
        let ser = solve_taylor(&s4, 16).unwrap();
        let r = evaluate(&s4, &ser, Complex64::zero()).unwrap();
        assert_eq!((r.value, r.residual), (Complex64::zero(), 0.0));
    }

    #[test]
    fn overflow_reports_lifts() {
        let s2 = sys(&[0, 2, 1]);
        let ser = solve_taylor(&s2, 32).unwrap();
        match evaluate(&s2, &ser, Complex64::new(2000.0, 0.0)) {
            Err(CoreError::Overflow { lifts }) => assert!(lifts >= 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reversion_gives_minus_a2() {
        let ser = solve_taylor(&sys(&[0, 5, 1]), 12).unwrap();
        let g = schroeder_inverse(&ser);
        assert_eq!(g.exact.unwrap()[2], q(-1, 20));
    }
}
