//! Exact rational helpers shared by the series solvers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serializer;
use thiserror::Error;

/// Largest numerator/denominator size (in bits) kept on the exact path.
pub const BIT_BUDGET: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse `{0}` as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parses `"3"`, `"-1/20"` or a finite decimal such as `"2.5"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac_part.contains(['+', '-']) || (int_part.is_empty() && frac_part.is_empty()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = match digits.as_str() {
        "" | "-" | "+" => return Err(err()),
        d => d,
    };
    let value: BigInt = digits.parse().map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        BigRational::from_integer(value * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(value, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Natural log of `|n|` without overflowing to infinity for huge integers.
pub fn ln_abs_int(n: &BigInt) -> f64 {
    let b = n.bits();
    if b == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = b.saturating_sub(64);
    let top = (n.magnitude() >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of `|r|`; `-inf` for zero.
pub fn ln_abs(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_int(r.numer()) - ln_abs_int(r.denom())
}

pub fn bits(r: &BigRational) -> u64 {
    r.numer().bits().max(r.denom().bits())
}

pub fn over_budget(values: &[BigRational]) -> bool {
    values.iter().any(|v| bits(v) > BIT_BUDGET)
}

/// Exact real `n`-th root of a rational, when it exists.
pub fn exact_nth_root(r: &BigRational, n: u32) -> Option<BigRational> {
    if n == 1 {
        return Some(r.clone());
    }
    if r.is_negative() {
        if n.is_multiple_of(2) {
            return None;
        }
        return exact_nth_root(&-r, n).map(|x| -x);
    }
    let num = r.numer().nth_root(n);
    let den = r.denom().nth_root(n);
    let candidate = BigRational::new(num, den);
    (num_traits::pow(candidate.clone(), n as usize) == *r).then_some(candidate)
}

/// Small-denominator rational approximation of `x` (continued fractions),
/// used to snap float fixed points back onto the exact path.
pub fn rational_approximation(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a;
        if frac.abs() < 1e-12 || ((h1 as f64) / (k1 as f64) - x).abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn serialize_rationals<S: Serializer>(
    values: &Option<Vec<BigRational>>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    match values {
        Some(v) => serializer.collect_seq(v.iter().map(format_rational)),
        None => serializer.serialize_none(),
    }
}

pub fn serialize_rational_opt<S: Serializer>(
    value: &Option<BigRational>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => serializer.serialize_str(&format_rational(v)),
        None => serializer.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/20").unwrap(), q(1, 20));
        assert_eq!(parse_rational("-3").unwrap(), q(-3, 1));
        assert_eq!(parse_rational("2.5").unwrap(), q(5, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), q(-1, 8));
        assert_eq!(parse_rational("1e2").unwrap(), q(100, 1));
        for bad in ["", "x", "1/0", "1.2.3", "--1", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn logs_of_huge_rationals() {
        let big = BigRational::new(num_traits::pow(BigInt::from(3), 2000), BigInt::from(7));
        assert!((ln_abs(&big) - (2000.0 * 3f64.ln() - 7f64.ln())).abs() < 1e-9);
        assert_eq!(ln_abs(&q(0, 1)), f64::NEG_INFINITY);
    }

    #[test]
    fn nth_roots() {
        assert_eq!(exact_nth_root(&q(4, 9), 2), Some(q(2, 3)));
        assert_eq!(exact_nth_root(&q(-8, 27), 3), Some(q(-2, 3)));
        assert_eq!(exact_nth_root(&q(2, 1), 2), None);
        assert_eq!(exact_nth_root(&q(-4, 1), 2), None);
    }

    #[test]
    fn continued_fraction_snap() {
        assert_eq!(rational_approximation(-1.5, 1000), Some(q(-3, 2)));
        assert_eq!(rational_approximation(0.2, 1000), Some(q(1, 5)));
        assert_eq!(rational_approximation(1.0 / 3.0, 1000), Some(q(1, 3)));
    }
}
