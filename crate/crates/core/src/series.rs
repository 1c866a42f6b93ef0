//! Truncated formal power series over exact or floating coefficients.
//!
//! A series is a `Vec<T>` of coefficients in ascending order; its length
//! fixes the truncation (`len = N + 1` keeps terms through `x^N`).

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Num;
use std::fmt::Debug;
use std::ops::Neg;

/// Coefficient ring used by the series routines.
pub trait Coeff: Clone + Num + Neg<Output = Self> + Debug + Send + Sync {
    fn from_int(n: i64) -> Self;
}

impl Coeff for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
}

impl Coeff for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
}

impl Coeff for Complex64 {
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
}

pub fn zeros<T: Coeff>(len: usize) -> Vec<T> {
    vec![T::zero(); len]
}

/// The series `x` truncated to `len` coefficients.
pub fn identity<T: Coeff>(len: usize) -> Vec<T> {
    let mut v = zeros(len);
    if len > 1 {
        v[1] = T::one();
    }
    v
}

pub fn add<T: Coeff>(a: &[T], b: &[T]) -> Vec<T> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(T::zero);
            let y = b.get(i).cloned().unwrap_or_else(T::zero);
            x + y
        })
        .collect()
}

pub fn scale<T: Coeff>(a: &[T], c: &T) -> Vec<T> {
    a.iter().map(|x| x.clone() * c.clone()).collect()
}

/// Product truncated to `len` coefficients.
pub fn mul<T: Coeff>(a: &[T], b: &[T], len: usize) -> Vec<T> {
    let mut out: Vec<T> = zeros(len);
    for (i, ai) in a.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].clone() + ai.clone() * bj.clone();
        }
    }
    out
}

/// Multiplicative inverse; requires `a[0] != 0`.
pub fn inverse<T: Coeff>(a: &[T], len: usize) -> Vec<T> {
    assert!(!a[0].is_zero(), "series inverse needs a unit constant term");
    let mut out = zeros(len);
    let inv0 = T::one() / a[0].clone();
    out[0] = inv0.clone();
    for n in 1..len {
        let mut acc = T::zero();
        for k in 1..=n.min(a.len() - 1) {
            acc = acc + a[k].clone() * out[n - k].clone();
        }
        out[n] = -(acc * inv0.clone());
    }
    out
}

pub fn derivative<T: Coeff>(a: &[T]) -> Vec<T> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.clone() * T::from_int(k as i64))
        .collect()
}

/// `a(b(x))` truncated to `len`; requires `b[0] == 0`.
pub fn compose<T: Coeff>(a: &[T], b: &[T], len: usize) -> Vec<T> {
    assert!(
        b.first().is_none_or(|c| c.is_zero()),
        "inner series must vanish at 0"
    );
    let mut out = zeros(len);
    for coef in a.iter().rev() {
        out = mul(&out, b, len);
        out[0] = out[0].clone() + coef.clone();
    }
    out
}

/// Compositional inverse of `a = x + a_2 x^2 + ...` by Lagrange inversion.
pub fn reverse<T: Coeff>(a: &[T], len: usize) -> Vec<T> {
    assert!(a.len() >= 2 && a[0].is_zero(), "reversion needs a[0] = 0");
    // h(w) = w / a(w) = 1 / (a_1 + a_2 w + ...)
    let shifted: Vec<T> = a[1..].to_vec();
    let h = inverse(&shifted, len);
    let mut out = zeros(len);
    let mut power = vec![T::one()];
    power.resize(len, T::zero());
    for n in 1..len {
        power = mul(&power, &h, len);
        out[n] = power[n - 1].clone() / T::from_int(n as i64);
    }
    out
}

/// `log a` for `a[0] == 1`.
pub fn log1<T: Coeff>(a: &[T], len: usize) -> Vec<T> {
    assert!(a[0] == T::one(), "log needs a[0] = 1");
    let q = mul(&derivative(a), &inverse(a, len), len);
    let mut out = zeros(len);
    for n in 1..len {
        out[n] = q[n - 1].clone() / T::from_int(n as i64);
    }
    out
}

/// `exp a` for `a[0] == 0`.
pub fn exp0<T: Coeff>(a: &[T], len: usize) -> Vec<T> {
    assert!(a.first().is_none_or(|c| c.is_zero()), "exp needs a[0] = 0");
    let mut out = zeros(len);
    out[0] = T::one();
    for n in 1..len {
        let mut acc = T::zero();
        for k in 1..=n.min(a.len() - 1) {
            acc = acc + T::from_int(k as i64) * a[k].clone() * out[n - k].clone();
        }
        out[n] = acc / T::from_int(n as i64);
    }
    out
}

/// `a^alpha` for `a[0] == 1` (J.C.P. Miller recurrence).
pub fn pow_frac<T: Coeff>(a: &[T], alpha: &T, len: usize) -> Vec<T> {
    assert!(a[0] == T::one(), "power needs a[0] = 1");
    let mut out = zeros(len);
    out[0] = T::one();
    let alpha1 = alpha.clone() + T::one();
    for n in 1..len {
        let mut acc = T::zero();
        for k in 1..=n.min(a.len() - 1) {
            let w = alpha1.clone() * T::from_int(k as i64) - T::from_int(n as i64);
            acc = acc + w * a[k].clone() * out[n - k].clone();
        }
        out[n] = acc / T::from_int(n as i64);
    }
    out
}

/// Integer power by repeated multiplication, truncated to `len`.
pub fn pow<T: Coeff>(a: &[T], k: usize, len: usize) -> Vec<T> {
    let mut out = zeros(len);
    out[0] = T::one();
    for _ in 0..k {
        out = mul(&out, a, len);
    }
    out
}

/// Horner evaluation.
pub fn eval<T: Coeff>(a: &[T], x: &T) -> T {
    a.iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
}

pub fn eval_c(a: &[f64], z: Complex64) -> Complex64 {
    a.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}
