//! Polynomial root finding: companion-matrix eigenvalues plus Newton polish.

use crate::error::CoreError;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates `sum c_k z^k` and its derivative.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots (with multiplicity) of a polynomial with ascending complex
/// coefficients. Leading coefficient must be nonzero.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, CoreError> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    let n = coeffs.len() - 1;
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![-coeffs[0] / coeffs[1]]),
        2 => return Ok(quadratic(coeffs[2], coeffs[1], coeffs[0]).to_vec()),
        _ => {}
    }
    let lead = coeffs[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i] / lead;
    }
    let eig = m
        .schur()
        .eigenvalues()
        .ok_or_else(|| CoreError::Numeric("companion Schur decomposition failed".into()))?;
    let mut out: Vec<Complex64> = eig.iter().map(|&z| polish(&coeffs, z)).collect();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let worst = out
        .iter()
        .map(|&z| eval_with_derivative(&coeffs, z).0.norm() / (scale * z.norm().max(1.0).powi(n as i32)))
        .fold(0.0, f64::max);
    if !worst.is_finite() || worst > 1e-6 {
        return Err(CoreError::Numeric(format!(
            "root finder did not converge (relative residual {worst:e})"
        )));
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

pub fn real_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, CoreError> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    roots(&c)
}

/// Newton steps, kept only while they reduce the residual.
pub fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut fz, _) = eval_with_derivative(coeffs, z);
    for _ in 0..8 {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let (fnext, _) = eval_with_derivative(coeffs, next);
        if !(fnext.norm() < fz.norm()) {
            break;
        }
        z = next;
        fz = fnext;
    }
    z
}

/// Roots of `a z^2 + b z + c`, cancellation-free.
pub fn quadratic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let qq = -0.5 * (b + sign * disc);
    if qq.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [qq / a, c / qq]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_known_roots() {
        // (z-1)(z+2)(z-3) = z^3 - 2z^2 - 5z + 6
        let r = real_roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        let want = [-2.0, 1.0, 3.0];
        for (z, w) in r.iter().zip(want) {
            assert!((z - w).norm() < 1e-12, "{z} vs {w}");
        }
    }

    #[test]
    fn quadratic_is_stable_for_small_roots() {
        let [r1, r2] = quadratic(1.0.into(), 1e8.into(), 1.0.into());
        let small = if r1.norm() < r2.norm() { r1 } else { r2 };
        assert!((small.re + 1e-8).abs() < 1e-20);
    }

    #[test]
    fn complex_coefficients() {
        // z^3 - i
        let c = [Complex64::new(0.0, -1.0), 0.0.into(), 0.0.into(), 1.0.into()];
        for z in roots(&c).unwrap() {
            assert!((z.powi(3) - Complex64::i()).norm() < 1e-12);
        }
    }
}
