//! Böttcher coordinate at infinity, the complex Green function `G = log g`,
//! and the linearizers at finite attracting fixed points.

use crate::error::{CoreError, Result};
use crate::exact::{self, rational_approximation, to_f64};
use crate::poly_core::{taylor_shift, NormalizedSystem, RealPolynomial};
use crate::series::{self, Coeff};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::f64::consts::PI;

pub const DEFAULT_LAURENT_ORDER: usize = 32;
const MAX_ITER: usize = 1000;

/// `g(z) = z + Σ b_n z^{-n}` or `g^{-1}(w) = w + Σ c_n w^{-n}`; entry `n` holds `b_n` / `c_n`.
#[derive(Clone, Debug, Serialize)]
pub struct LaurentSeries {
    #[serde(serialize_with = "exact::serialize_rationals")]
    pub exact: Option<Vec<BigRational>>,
    pub coeffs: Vec<f64>,
    pub order: usize,
}

impl LaurentSeries {
    fn from_coeffs<T: Coeff>(c: Vec<T>, conv: impl Fn(&T) -> f64, exact: Option<Vec<BigRational>>) -> Self {
        Self {
            order: c.len() - 1,
            coeffs: c.iter().map(conv).collect(),
            exact,
        }
    }

    /// `z + Σ c_n z^{-n}`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let t = z.inv();
        let tail = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * t + c);
        z + tail
    }
}

/// Expansion of `U(t) = g(1/t) t` around `t = 0` through `t^{len-1}`.
fn boettcher_u<T: Coeff>(p: &[T], len: usize, d_inv: &T) -> Vec<T> {
    let d = p.len() - 1;
    // P(t) = 1 + p_{d-1} t + ... + p_1 t^{d-1}
    let mut big_p = series::zeros::<T>(len);
    for k in 0..d.min(len) {
        big_p[k] = p[d - k].clone();
    }
    let x = {
        let mut td = series::zeros::<T>(len);
        if d < len {
            td[d] = T::one();
        }
        series::mul(&td, &series::inverse(&big_p, len), len)
    };
    let mut u = series::zeros::<T>(len);
    u[0] = T::one();
    let sweeps = len / d + 2;
    for _ in 0..sweeps {
        // Σ b_n X^n with b_n = u[n+1]; only n with d(n+1) < len contribute.
        let terms = (len - 1) / d;
        let mut acc = series::zeros::<T>(len);
        for n in (0..terms).rev() {
            acc = series::mul(&acc, &x, len);
            if n + 1 < len {
                acc[0] = acc[0].clone() + u[n + 1].clone();
            }
        }
        let mut rhs = big_p.clone();
        for k in d..len {
            rhs[k] = rhs[k].clone() + acc[k - d].clone();
        }
        u = series::pow_frac(&rhs, d_inv, len);
    }
    u
}

/// Laurent coefficients `b_0..b_N` of the Böttcher coordinate, solving `g(p(z)) = g(z)^d`.
pub fn boettcher_coeffs(sys: &NormalizedSystem, order: usize) -> LaurentSeries {
    let len = order + 2;
    let d = sys.d as i64;
    let exact = boettcher_u(sys.poly.coeffs(), len, &BigRational::new(1.into(), d.into()));
    if !exact::over_budget(&exact) {
        let b = exact[1..].to_vec();
        return LaurentSeries::from_coeffs(b.clone(), to_f64, Some(b));
    }
    let fl = boettcher_u(sys.poly.coeffs_f64(), len, &(1.0 / d as f64));
    LaurentSeries::from_coeffs(fl[1..].to_vec(), |c| *c, None)
}

fn inverse_from_u<T: Coeff>(u: &[T]) -> Vec<T> {
    let len = u.len();
    // φ(t) = t / U(t) = 1/g(1/t); revert to ψ and set V(s) = s / ψ(s).
    let inv_u = series::inverse(u, len);
    let mut phi = series::zeros::<T>(len + 1);
    phi[1..].clone_from_slice(&inv_u);
    let psi = series::reverse(&phi, len + 1);
    let v = series::inverse(&psi[1..], len);
    v[1..].to_vec()
}

/// Coefficients `c_0..c_N` of `g^{-1}(w) = w + Σ c_n w^{-n}`.
pub fn boettcher_inverse_coeffs(b: &LaurentSeries) -> LaurentSeries {
    match &b.exact {
        Some(e) => {
            let mut u = vec![BigRational::one()];
            u.extend(e.iter().cloned());
            let c = inverse_from_u(&u);
            if exact::over_budget(&c) {
                return float_inverse(b);
            }
            LaurentSeries::from_coeffs(c.clone(), to_f64, Some(c))
        }
        None => float_inverse(b),
    }
}

fn float_inverse(b: &LaurentSeries) -> LaurentSeries {
    let mut u = vec![1.0];
    u.extend(b.coeffs.iter().copied());
    LaurentSeries::from_coeffs(inverse_from_u(&u), |c| *c, None)
}

/// Checks `g(p(z)) = g(z)^d` through the truncation order in exact arithmetic.
pub fn boettcher_identity_exact(sys: &NormalizedSystem, b: &LaurentSeries) -> Option<bool> {
    let e = b.exact.as_ref()?;
    let len = e.len() + 1;
    let d = sys.d;
    let mut u = vec![BigRational::one()];
    u.extend(e.iter().cloned());
    let p = sys.poly.coeffs();
    let mut big_p = series::zeros::<BigRational>(len);
    for k in 0..d.min(len) {
        big_p[k] = p[d - k].clone();
    }
    let mut td = series::zeros::<BigRational>(len);
    if d < len {
        td[d] = BigRational::one();
    }
    let x = series::mul(&td, &series::inverse(&big_p, len), len);
    let lhs = series::mul(&big_p, &series::compose(&u, &x, len), len);
    let rhs = series::pow(&u, d, len);
    Some(lhs == rhs)
}

/// `R = 1 + max(2, Σ |p_j|)`: every orbit leaving this disc escapes.
pub fn escape_radius(poly: &RealPolynomial) -> f64 {
    1.0 + poly.l1_norm().max(2.0)
}

/// Value of the complex Green function `G = log g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: Complex64,
    /// `Re G`, the real Green function; 0 on the filled Julia set.
    pub abs_green: f64,
    /// Number of orbit steps taken before the orbit left the escape disc.
    pub branch_path: u32,
    pub escaped: bool,
}

/// `ε(w) = p(w)/w^d - 1`, computed without forming `w^d`.
fn eps(p: &[f64], w: Complex64) -> Complex64 {
    let d = p.len() - 1;
    let t = w.inv();
    let mut acc = Complex64::zero();
    // Horner in t = 1/w for p_{d-1} + p_{d-2} t + ... + p_0 t^{d-1}
    for &c in &p[..d] {
        acc = acc * t + c;
    }
    acc * t
}

struct SumResult {
    value: Complex64,
    /// Orbit steps spent inside the escape disc (the branch ambiguity is `2πi / d^k`).
    inside: u32,
}

/// `Log z + Σ_k d^{-k-1} Log(1 + ε(w_k))` along the orbit of `z`.
fn green_sum(poly: &RealPolynomial, z: Complex64) -> Option<SumResult> {
    let p = poly.coeffs_f64();
    let d = poly.degree() as f64;
    let r = escape_radius(poly);
    let mut w = z;
    let mut total = z.ln();
    let mut weight = 1.0 / d;
    let mut inside = 0u32;
    let mut reached = w.norm() >= r;
    for _ in 0..MAX_ITER {
        if w.norm() < r {
            inside += 1;
        } else {
            reached = true;
        }
        let e = eps(p, w);
        let term = (Complex64::one() + e).ln() * weight;
        total += term;
        if reached && term.norm() < 1e-18 * total.norm().max(1e-300) {
            break;
        }
        w = poly.eval(w);
        weight /= d;
        if !w.is_finite() || weight == 0.0 {
            break;
        }
    }
    if !reached {
        return None;
    }
    Some(SumResult { value: total, inside })
}

/// Complex Green function `G(z) = log g(z)`. Outside the escape disc the
/// principal branch (`G ~ Log z`) is used; inside, the branch is continued
/// along the ray from `z` to the disc boundary.
pub fn green(sys: &NormalizedSystem, z: Complex64) -> Result<GreenValue> {
    green_poly(&sys.poly, z)
}

pub fn green_poly(poly: &RealPolynomial, z: Complex64) -> Result<GreenValue> {
    let d = poly.degree() as f64;
    let r = escape_radius(poly);
    let Some(at_z) = green_sum(poly, z) else {
        return Ok(GreenValue {
            value: Complex64::zero(),
            abs_green: 0.0,
            branch_path: MAX_ITER as u32,
            escaped: false,
        });
    };
    let done = |value: Complex64| GreenValue {
        value,
        abs_green: value.re.max(0.0),
        branch_path: at_z.inside,
        escaped: true,
    };
    if at_z.inside == 0 {
        return Ok(done(at_z.value));
    }
    // Real orbits staying in the right half-plane need no unwrapping.
    if z.im == 0.0 && z.re > 0.0 && at_z.value.im == 0.0 {
        return Ok(done(at_z.value));
    }
    let dir = z / z.norm();
    let mut t = r;
    let mut prev = green_sum(poly, dir * t)
        .ok_or_else(|| CoreError::Branch("ray start not escaping".into()))?
        .value;
    let target = z.norm();
    let mut step = 0.97f64;
    while t > target {
        let next_t = (t * step).max(target);
        let cand = green_sum(poly, dir * next_t).ok_or_else(|| {
            CoreError::Branch(format!("ray meets the filled Julia set near |z| = {next_t}"))
        })?;
        let unit = 2.0 * PI / d.powi(cand.inside as i32);
        let n = ((prev.im - cand.value.im) / unit).round();
        let adjusted = cand.value + Complex64::new(0.0, n * unit);
        if (adjusted - prev).norm() > 0.25 * unit {
            step = 1.0 - (1.0 - step) * 0.5;
            if 1.0 - step < 1e-9 {
                return Err(CoreError::Branch("continuation step underflow".into()));
            }
            continue;
        }
        prev = adjusted;
        t = next_t;
        step = 1.0 - ((1.0 - step) * 1.5).min(0.03);
    }
    Ok(done(prev))
}

/// `G` from the Laurent data: `Log z + Log U(1/z)`, valid for large `|z|`.
pub fn green_laurent(b: &LaurentSeries, z: Complex64) -> Complex64 {
    let t = z.inv();
    let u = b
        .coeffs
        .iter()
        .rev()
        .fold(Complex64::zero(), |acc, &c| acc * t + c)
        * t
        + 1.0;
    z.ln() + u.ln()
}

/// Schröder linearizer at an attracting fixed point: `η Ψ(z) = Ψ(p(z))`.
#[derive(Clone, Debug, Serialize)]
pub struct KoenigsSeries {
    pub w0: Complex64,
    pub eta: Complex64,
    #[serde(serialize_with = "exact::serialize_rationals")]
    pub exact: Option<Vec<BigRational>>,
    /// `ψ_0 = 0, ψ_1 = 1, ψ_2, ...` in powers of `z - w0`.
    pub coeffs: Vec<Complex64>,
    /// Coefficients of `Ψ^{-1}` in powers of `ζ`, centred at `w0`.
    pub inverse: Vec<Complex64>,
}

fn koenigs_coeffs<T: Coeff>(shifted: &[T], len: usize) -> Vec<T> {
    let eta = shifted[1].clone();
    let mut psi = series::zeros::<T>(len);
    if len > 1 {
        psi[1] = T::one();
    }
    // powers[k] = P^k truncated
    let mut powers = vec![series::zeros::<T>(len); len];
    powers[0][0] = T::one();
    for k in 1..len {
        powers[k] = series::mul(&powers[k - 1], shifted, len);
    }
    let mut eta_n = eta.clone();
    for n in 2..len {
        eta_n = eta_n * eta.clone();
        let mut acc = T::zero();
        for (k, pk) in powers.iter().enumerate().take(n).skip(1) {
            acc = acc + psi[k].clone() * pk[n].clone();
        }
        psi[n] = acc / (eta.clone() - eta_n.clone());
    }
    psi
}

/// `p(w0 + y) - w0` for rational `w0`.
fn shifted_exact(p: &RealPolynomial, w0: &BigRational) -> Vec<BigRational> {
    let mut s = taylor_shift(p.coeffs(), w0);
    s[0] = s[0].clone() - w0.clone();
    s
}

fn shifted_complex(p: &RealPolynomial, w0: Complex64) -> Vec<Complex64> {
    let mut s = taylor_shift(&p.coeffs_c(), &w0);
    s[0] -= w0;
    s
}

fn snap(p: &RealPolynomial, w0: Complex64) -> Option<BigRational> {
    if w0.im != 0.0 {
        return None;
    }
    rational_approximation(w0.re, 1_000_000).filter(|q| p.eval_exact(q) == *q)
}

pub fn koenigs_psi(p: &RealPolynomial, w0: Complex64, order: usize) -> Result<KoenigsSeries> {
    let len = order + 1;
    let eta = p.eval_derivative(w0);
    if (p.eval(w0) - w0).norm() > 1e-9 * w0.norm().max(1.0) {
        return Err(CoreError::InvalidInput(format!("{w0} is not a fixed point")));
    }
    if eta.norm() == 0.0 {
        return Err(CoreError::InvalidInput(
            "superattracting fixed point: use finite_boettcher".into(),
        ));
    }
    if eta.norm() >= 1.0 {
        return Err(CoreError::NotAttracting(format!("|p'(w0)| = {} ≥ 1", eta.norm())));
    }
    let (exact, coeffs) = match snap(p, w0) {
        Some(q) => {
            let e = koenigs_coeffs(&shifted_exact(p, &q), len);
            if exact::over_budget(&e) {
                (None, koenigs_coeffs(&shifted_complex(p, w0), len))
            } else {
                let c = e.iter().map(|x| Complex64::new(to_f64(x), 0.0)).collect();
                (Some(e), c)
            }
        }
        None => (None, koenigs_coeffs(&shifted_complex(p, w0), len)),
    };
    let inverse = series::reverse(&coeffs, len);
    Ok(KoenigsSeries {
        w0,
        eta,
        exact,
        coeffs,
        inverse,
    })
}

impl KoenigsSeries {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        series::eval(&self.coeffs, &(z - self.w0))
    }

    /// `Ψ(z) = η^{-i} Ψ(p^i(z))`, iterating until the orbit is within `r_small` of `w0`.
    pub fn eval_orbit(&self, p: &RealPolynomial, z: Complex64, r_small: f64) -> Result<Complex64> {
        let mut w = z;
        let mut scale = Complex64::one();
        for _ in 0..MAX_ITER {
            if (w - self.w0).norm() <= r_small {
                return Ok(self.eval(w) * scale);
            }
            w = p.eval(w);
            scale /= self.eta;
            if !w.is_finite() {
                break;
            }
        }
        Err(CoreError::NotAttracting(format!(
            "orbit of {z} does not reach w0"
        )))
    }

    /// Formal residual `ηΨ - Ψ∘p` vanishes through the truncation order (exact path only).
    pub fn identity_exact(&self, p: &RealPolynomial) -> Option<bool> {
        let e = self.exact.as_ref()?;
        let q = rational_approximation(self.w0.re, 1_000_000)?;
        let shifted = shifted_exact(p, &q);
        let len = e.len();
        let lhs = series::scale(e, &shifted[1]);
        let rhs = series::compose(e, &shifted, len);
        Some(lhs == rhs)
    }
}

/// Böttcher coordinate at a superattracting fixed point: `g(p(z)) = A g(z)^k`.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteBoettcher {
    pub w0: Complex64,
    pub k: usize,
    pub a: f64,
    #[serde(serialize_with = "exact::serialize_rationals")]
    pub exact: Option<Vec<BigRational>>,
    /// Coefficients of `g` in powers of `z - w0`.
    pub coeffs: Vec<f64>,
}

fn finite_boettcher_coeffs<T: Coeff>(shifted: &[T], k: usize, len: usize, k_inv: &T) -> Vec<T> {
    let a = shifted[k].clone();
    // Q(y) = P(y) / (A y^k)
    let mut q = series::zeros::<T>(len);
    for (i, c) in shifted.iter().enumerate().skip(k) {
        if i - k < len {
            q[i - k] = c.clone() / a.clone();
        }
    }
    let mut inner = series::zeros::<T>(len);
    for (i, c) in shifted.iter().enumerate().take(len) {
        inner[i] = c.clone();
    }
    let mut v = series::zeros::<T>(len);
    v[0] = T::one();
    for _ in 0..len {
        let rhs = series::mul(&q, &series::compose(&v, &inner, len), len);
        let next = series::pow_frac(&rhs, k_inv, len);
        if next == v {
            break;
        }
        v = next;
    }
    // g(y) = y V(y)
    let mut g = series::zeros::<T>(len);
    g[1..len].clone_from_slice(&v[..len - 1]);
    g
}

pub fn finite_boettcher(p: &RealPolynomial, w0: Complex64, order: usize) -> Result<FiniteBoettcher> {
    let len = order + 1;
    let q = snap(p, w0);
    let shifted_f: Vec<f64> = match &q {
        Some(q) => shifted_exact(p, q).iter().map(to_f64).collect(),
        None => {
            if w0.im != 0.0 {
                return Err(CoreError::InvalidInput("complex superattracting centre".into()));
            }
            shifted_complex(p, w0).iter().map(|c| c.re).collect()
        }
    };
    let scale = shifted_f.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if shifted_f[0].abs() > 1e-9 * scale.max(1.0) {
        return Err(CoreError::InvalidInput(format!("{w0} is not a fixed point")));
    }
    if shifted_f[1].abs() > 1e-12 * scale.max(1.0) {
        return Err(CoreError::InvalidInput(format!(
            "{w0} is not superattracting (multiplier {})",
            shifted_f[1]
        )));
    }
    let k = (2..shifted_f.len())
        .find(|&i| shifted_f[i].abs() > 1e-12 * scale)
        .ok_or_else(|| CoreError::InvalidInput("degenerate polynomial".into()))?;
    let (exact, coeffs) = match &q {
        Some(q) => {
            let e = finite_boettcher_coeffs(
                &shifted_exact(p, q),
                k,
                len,
                &BigRational::new(1.into(), (k as i64).into()),
            );
            let c = e.iter().map(to_f64).collect();
            (Some(e), c)
        }
        None => {
            let mut s = shifted_f.clone();
            s[0] = 0.0;
            s[1] = 0.0;
            (None, finite_boettcher_coeffs(&s, k, len, &(1.0 / k as f64)))
        }
    };
    Ok(FiniteBoettcher {
        w0,
        k,
        a: shifted_f[k],
        exact,
        coeffs,
    })
}

impl FiniteBoettcher {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let y = z - self.w0;
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * y + c)
    }

    /// `Re log(B g(z))` with `B = A^{1/(k-1)}`, via `k^{-i} Re log(B g(p^i(z)))`.
    pub fn log_abs_orbit(&self, p: &RealPolynomial, z: Complex64, r_small: f64) -> Result<f64> {
        let b = self.a.abs().powf(1.0 / (self.k as f64 - 1.0));
        let mut w = z;
        let mut scale = 1.0;
        for _ in 0..MAX_ITER {
            if (w - self.w0).norm() <= r_small {
                let g = self.eval(w);
                return Ok(scale * (b * g.norm()).ln());
            }
            w = p.eval(w);
            scale /= self.k as f64;
            if !w.is_finite() {
                break;
            }
        }
        Err(CoreError::NotAttracting(format!(
            "orbit of {z} does not reach w0"
        )))
    }

    pub fn identity_exact(&self, p: &RealPolynomial) -> Option<bool> {
        let e = self.exact.as_ref()?;
        let q = rational_approximation(self.w0.re, 1_000_000)?;
        let shifted = shifted_exact(p, &q);
        let len = e.len();
        let lhs = series::compose(e, &shifted, len);
        let a = shifted[self.k].clone();
        let rhs = series::scale(&series::pow(e, self.k, len), &a);
        Some(lhs == rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::normalize;

    fn sys(c: &[i64]) -> NormalizedSystem {
        normalize(&RealPolynomial::from_integers(c).unwrap(), Complex64::zero()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn laurent_coefficients() {
        let b = boettcher_coeffs(&sys(&[0, 5, 1]), 8);
        let e = b.exact.as_ref().unwrap();
        assert_eq!((e[0].clone(), e[1].clone()), (q(5, 2), q(-15, 8)));
        let b = boettcher_coeffs(&sys(&[0, 2, 1]), 8);
        assert_eq!(b.exact.as_ref().unwrap()[0], q(1, 1));
        assert!(b.exact.unwrap()[1..].iter().all(Zero::is_zero));
    }

    #[test]
    fn joukowski_inverse() {
        let b = boettcher_coeffs(&sys(&[0, 4, 1]), 10);
        let c = boettcher_inverse_coeffs(&b);
        let e = c.exact.unwrap();
        assert_eq!((e[0].clone(), e[1].clone()), (q(-2, 1), q(1, 1)));
        assert!(e[2..].iter().all(Zero::is_zero));
    }

    #[test]
    fn exact_identity() {
        for c in [&[0, 5, 1][..], &[0, 3, 2, 1]] {
            let s = sys(c);
            let b = boettcher_coeffs(&s, 12);
            assert_eq!(boettcher_identity_exact(&s, &b), Some(true), "{c:?}");
        }
    }

    #[test]
    fn green_closed_forms() {
        let s = sys(&[0, 2, 1]);
        for x in [0.1, 1.0, 7.0] {
            let g = green(&s, Complex64::new(x, 0.0)).unwrap();
            assert!((g.value.re - (x + 1.0f64).ln()).abs() < 1e-12);
        }
        let s = sys(&[0, 4, 1]);
        for x in [0.05, 2.0, 40.0] {
            let g = green(&s, Complex64::new(x, 0.0)).unwrap();
            let want = ((x + 2.0 + (x * x + 4.0 * x).sqrt()) / 2.0).ln();
            assert!((g.value.re - want).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn green_branch_continuation_matches_closed_form() {
        // z^2 + 2z: g(z) = z + 1 everywhere outside the closed unit disc about -1.
        let s = sys(&[0, 2, 1]);
        for z in [
            Complex64::new(-1.5, 1.2),
            Complex64::new(0.2, -0.9),
            Complex64::new(-2.5, -0.1),
        ] {
            let g = green(&s, z).unwrap();
            let want = (z + 1.0).ln();
            assert!((g.value - want).norm() < 1e-10, "{z}: {} vs {want}", g.value);
        }
    }

    #[test]
    fn filled_julia_points() {
        let s = sys(&[0, 2, 1]);
        let g = green(&s, Complex64::new(-1.0, 0.5)).unwrap();
        assert!(!g.escaped && g.abs_green == 0.0);
    }

    #[test]
    fn koenigs_second_coefficient() {
        let p = RealPolynomial::new(vec![q(0, 1), q(5, 2), q(1, 1)]).unwrap();
        let k = koenigs_psi(&p, Complex64::new(-1.5, 0.0), 16).unwrap();
        assert_eq!(k.exact.as_ref().unwrap()[2], q(-4, 3));
        assert_eq!(k.identity_exact(&p), Some(true));
    }

    #[test]
    fn finite_boettcher_examples() {
        let p = RealPolynomial::from_integers(&[0, 2, 1]).unwrap();
        let fb = finite_boettcher(&p, Complex64::new(-1.0, 0.0), 8).unwrap();
        assert_eq!((fb.k, fb.a), (2, 1.0));
        assert_eq!(fb.exact.as_ref().unwrap()[1], q(1, 1));
        assert!(fb.exact.as_ref().unwrap()[2..].iter().all(Zero::is_zero));
        let p = RealPolynomial::from_integers(&[0, 3, 3, 1]).unwrap();
        let fb = finite_boettcher(&p, Complex64::new(-1.0, 0.0), 8).unwrap();
        assert_eq!(fb.k, 3);
        // A nontrivial case: z^3 + 3z^2 at 0 (k = 2, A = 3).
        let p = RealPolynomial::from_integers(&[0, 0, 3, 1]).unwrap();
        let fb = finite_boettcher(&p, Complex64::zero(), 12).unwrap();
        assert_eq!(fb.identity_exact(&p), Some(true));
    }
}
