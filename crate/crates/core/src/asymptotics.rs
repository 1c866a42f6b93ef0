//! The periodic factor `F` of `log g(f(z)) = z^ρ F(log_λ z)`: sampling on rays,
//! constancy verdicts, Fourier coefficients by FFT and by Mellin residues, the
//! asymptotic expansion of `f`, and asymptotics near finite attracting points.

use crate::boettcher_green::{
    finite_boettcher, green, koenigs_psi, FiniteBoettcher, KoenigsSeries, LaurentSeries,
};
use crate::error::{CoreError, Result};
use crate::harmonic_measure::{mellin_mu, MeasureSample};
use crate::poincare_series::{evaluate, lift_depth, solve_taylor, PowerSeries};
use crate::poly_core::{chebyshev_companion, classify_exceptional, Exceptional, NormalizedSystem};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Oscillation below this is reported as constant regardless of the noise floor.
pub const CONSTANT_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicProfile {
    pub theta: f64,
    /// `u = log_λ |z|` for each sample.
    pub u: Vec<f64>,
    pub values: Vec<Complex64>,
    pub samples_per_period: usize,
    pub periods: usize,
    pub mean: Complex64,
    /// Diameter of the sampled value set.
    pub oscillation: f64,
    /// `max |F(u) - F(u + 1)|` over adjacent periods.
    pub periodicity_defect: f64,
    /// Oscillation of the Chebyshev companion profile at the same `|z|` and density.
    pub noise_floor: Option<f64>,
    /// `Re(z^ρ F) > 0` at every sample.
    pub positive: bool,
}

/// `F(log_λ z) = z^{-ρ} G(f(z))`.
pub fn f_value(sys: &NormalizedSystem, series: &PowerSeries, z: Complex64) -> Result<Complex64> {
    let fz = evaluate(sys, series, z)?.value;
    let g = green(sys, fz)?;
    if !g.escaped {
        return Err(CoreError::NotEscaping(format!("f({z}) = {fz} does not escape")));
    }
    Ok(g.value * (-sys.rho * z.ln()).exp())
}

fn diameter(values: &[Complex64]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// Smallest `r ≥ 1` (on a `λ^{1/4}` ladder) with `Re G(f(r e^{iθ})) ≥ 1`.
fn profile_base(sys: &NormalizedSystem, series: &PowerSeries, theta: f64) -> Result<f64> {
    let dir = Complex64::from_polar(1.0, theta);
    let step = sys.lambda.powf(0.25);
    let mut r = 1.0;
    for _ in 0..400 {
        let fz = evaluate(sys, series, dir * r)?.value;
        let g = green(sys, fz)?;
        if g.escaped && g.abs_green >= 1.0 {
            return Ok(r);
        }
        r *= step;
    }
    Err(CoreError::NotEscaping(format!(
        "ray θ = {theta} does not reach |h| > e; try attracting_asymptotics"
    )))
}

fn sample_ray(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    theta: f64,
    r0: f64,
    lambda_grid: f64,
    periods: usize,
    samples_per_period: usize,
) -> Result<(Vec<f64>, Vec<Complex64>, bool)> {
    let dir = Complex64::from_polar(1.0, theta);
    let n = periods * samples_per_period;
    let pts: Vec<Result<(f64, Complex64, bool)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let step = j as f64 / samples_per_period as f64;
            let r = r0 * lambda_grid.powf(step);
            let z = dir * r;
            let fz = evaluate(sys, series, z)?.value;
            let g = green(sys, fz)?;
            if !g.escaped {
                return Err(CoreError::NotEscaping(format!("f({z}) does not escape")));
            }
            let val = g.value * (-sys.rho * z.ln()).exp();
            Ok((r.ln() / sys.lambda.ln(), val, g.value.re > 0.0))
        })
        .collect();
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut positive = true;
    for p in pts {
        let (uu, vv, pos) = p?;
        u.push(uu);
        v.push(vv);
        positive &= pos;
    }
    Ok((u, v, positive))
}

/// Samples `F` on the ray `arg z = θ` over `periods` consecutive periods.
pub fn extract_f(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    theta: f64,
    periods: usize,
    samples_per_period: usize,
) -> Result<PeriodicProfile> {
    if periods < 2 || samples_per_period < 3 {
        return Err(CoreError::InvalidInput(
            "need ≥ 2 periods and ≥ 3 samples per period".into(),
        ));
    }
    let r0 = profile_base(sys, series, theta)?;
    let (u, values, positive) = sample_ray(sys, series, theta, r0, sys.lambda, periods, samples_per_period)?;
    let s = samples_per_period;
    let periodicity_defect = (0..values.len() - s)
        .map(|i| (values[i] - values[i + s]).norm())
        .fold(0.0, f64::max);
    let noise_floor = noise_floor(sys, theta, r0, periods, samples_per_period, series.order).ok();
    Ok(PeriodicProfile {
        theta,
        mean: values.iter().sum::<Complex64>() / values.len() as f64,
        oscillation: diameter(&values),
        periodicity_defect,
        noise_floor,
        positive,
        u,
        values,
        samples_per_period,
        periods,
    })
}

/// Oscillation of the constant-`F` Chebyshev companion of the same degree,
/// sampled at the same points `z`.
fn noise_floor(
    sys: &NormalizedSystem,
    theta: f64,
    r0: f64,
    periods: usize,
    samples_per_period: usize,
    order: usize,
) -> Result<f64> {
    let comp = chebyshev_companion(sys.d)?;
    let cs = solve_taylor(&comp, order)?;
    let (_, values, _) = sample_ray(&comp, &cs, theta, r0, sys.lambda, periods, samples_per_period)?;
    Ok(diameter(&values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Constant,
    NonConstant,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstancyReport {
    pub verdict: Verdict,
    pub oscillation: f64,
    pub noise_floor: Option<f64>,
    pub algebraic: Exceptional,
    /// Whether the numerical verdict matches the algebraic classification.
    pub consistent: bool,
}

pub fn classify_constancy(profile: &PeriodicProfile, sys: &NormalizedSystem) -> ConstancyReport {
    let osc = profile.oscillation;
    let floor = profile.noise_floor.unwrap_or(0.0);
    let verdict = if osc < CONSTANT_FLOOR || osc < floor {
        Verdict::Constant
    } else if osc >= 10.0 * floor {
        Verdict::NonConstant
    } else {
        Verdict::Inconclusive
    };
    let algebraic = classify_exceptional(sys);
    let consistent = match verdict {
        Verdict::Constant => algebraic != Exceptional::Generic,
        Verdict::NonConstant => algebraic == Exceptional::Generic,
        Verdict::Inconclusive => false,
    };
    ConstancyReport {
        verdict,
        oscillation: osc,
        noise_floor: profile.noise_floor,
        algebraic,
        consistent,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierSource {
    Fft,
    Residue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FourierEntry {
    pub k: i32,
    pub value: Complex64,
    pub uncertainty: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierTable {
    pub source: FourierSource,
    pub entries: Vec<FourierEntry>,
    pub aliasing_bound: Option<f64>,
}

impl FourierTable {
    pub fn get(&self, k: i32) -> Option<&FourierEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// `Σ f_k e^{2πik u}` for complex `u`.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.entries
            .iter()
            .map(|e| e.value * (Complex64::new(0.0, 2.0 * PI * e.k as f64) * u).exp())
            .sum()
    }
}

/// Fourier coefficients `f_k`, `|k| ≤ K`, of the profile by FFT of each period,
/// averaged over periods. Values refer to the real-axis parametrization.
pub fn fourier_coeffs(profile: &PeriodicProfile, lambda: f64, kmax: usize) -> Result<FourierTable> {
    let s = profile.samples_per_period;
    if s < 2 * kmax + 1 {
        return Err(CoreError::InvalidInput(format!(
            "{s} samples cannot resolve |k| ≤ {kmax}"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(s);
    let per_period: Vec<Vec<Complex64>> = (0..profile.periods)
        .map(|p| {
            let mut buf = profile.values[p * s..(p + 1) * s].to_vec();
            fft.process(&mut buf);
            let u0 = profile.u[p * s];
            (0..s)
                .map(|m| {
                    let k = if m <= s / 2 { m as f64 } else { m as f64 - s as f64 };
                    buf[m] / s as f64 * Complex64::from_polar(1.0, -2.0 * PI * k * u0)
                })
                .collect()
        })
        .collect();
    let idx = |k: i64| k.rem_euclid(s as i64) as usize;
    // Highest resolved harmonics carry aliasing plus evaluation noise.
    let alias = (s / 2 - s / 8..=s / 2)
        .map(|m| {
            per_period
                .iter()
                .map(|c| c[m].norm().max(c[(s - m) % s].norm()))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let tilt = profile.theta / lambda.ln();
    let scale0 = per_period[0][0].norm();
    let np = profile.periods as f64;
    let mut entries = Vec::new();
    for k in -(kmax as i64)..=kmax as i64 {
        let vals: Vec<Complex64> = per_period.iter().map(|c| c[idx(k)]).collect();
        let mean = vals.iter().sum::<Complex64>() / np;
        let spread = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (np - 1.0) / np).sqrt()
        } else {
            0.0
        };
        let uncertainty = (spread * spread + alias * alias).sqrt() + 1e-15 * scale0;
        let undo_tilt = (2.0 * PI * k as f64 * tilt).exp();
        entries.push(FourierEntry {
            k: k as i32,
            value: mean * undo_tilt,
            uncertainty: uncertainty * undo_tilt,
            low_confidence: false,
        });
    }
    Ok(FourierTable {
        source: FourierSource::Fft,
        entries,
        aliasing_bound: Some(alias),
    })
}

/// Pole `s_k = -ρ - 2kπi / log λ` of the Mellin continuation.
pub fn residue_pole(sys: &NormalizedSystem, k: i32) -> Complex64 {
    Complex64::new(-sys.rho, -2.0 * PI * k as f64 / sys.lambda.ln())
}

/// `f_k = π H(s_k) / ((-log d - 2kπi) sin(π s_k))` from the harmonic-measure sample.
pub fn residue_fourier(sys: &NormalizedSystem, sample: &MeasureSample, k: i32) -> Result<FourierEntry> {
    let s = residue_pole(sys, k);
    let report = mellin_mu(sys, sample, s)?;
    let factor = PI / (Complex64::new(-(sys.d as f64).ln(), -2.0 * PI * k as f64) * (PI * s).sin());
    let value = factor * report.h;
    let uncertainty = factor.norm() * report.h_stderr;
    Ok(FourierEntry {
        k,
        value,
        uncertainty,
        low_confidence: uncertainty > 0.5 * value.norm(),
    })
}

pub fn residue_table(sys: &NormalizedSystem, sample: &MeasureSample, kmax: usize) -> Result<FourierTable> {
    let entries = (-(kmax as i32)..=kmax as i32)
        .map(|k| residue_fourier(sys, sample, k))
        .collect::<Result<_>>()?;
    Ok(FourierTable {
        source: FourierSource::Residue,
        entries,
        aliasing_bound: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub value: Complex64,
    pub h: Complex64,
    pub terms: usize,
}

/// `f(z) ≈ h + Σ_{n < terms} c_n h^{-n}` with `h = exp(z^ρ F(log_λ z))`.
pub fn asymptotic_eval(
    sys: &NormalizedSystem,
    table: &FourierTable,
    inverse: &LaurentSeries,
    z: Complex64,
    terms: usize,
) -> Result<AsymptoticValue> {
    let logz = z.ln();
    let u = logz / sys.lambda.ln();
    let h = ((sys.rho * logz).exp() * table.eval(u)).exp();
    if h.norm() <= 1.0 {
        return Err(CoreError::NotEscaping(format!("|h({z})| = {} ≤ 1", h.norm())));
    }
    let t = h.inv();
    let tail = inverse.coeffs[..terms.min(inverse.coeffs.len())]
        .iter()
        .rev()
        .fold(Complex64::zero(), |acc, &c| acc * t + c);
    Ok(AsymptoticValue {
        value: h + tail,
        h,
        terms,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Linearizer {
    Koenigs,
    Boettcher { k: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractingAsymptotics {
    pub w0: Complex64,
    pub eta: Complex64,
    /// `log_λ η` (principal), or `log_λ k` in the superattracting case.
    pub exponent: Complex64,
    pub theta: f64,
    pub linearizer: Linearizer,
    pub u: Vec<f64>,
    /// `H(log_λ z) = j(z) z^{-log_λ η}`, or `Re ℓ(z) |z|^{-log_λ k}` when superattracting.
    pub profile: Vec<Complex64>,
    pub oscillation: f64,
    pub max_relative_residual: f64,
    pub fitted_exponent: Option<f64>,
    pub nonconstant: bool,
    /// Superattracting case: `Re(z^{log_λ k} L) < 0` at every sample.
    pub re_zl_negative: Option<bool>,
}

/// Radius where a series with these coefficient magnitudes is accurate to ~1e-16.
fn accurate_radius(coeffs: impl Iterator<Item = f64>) -> f64 {
    let c: Vec<f64> = coeffs.collect();
    let n = c.len() - 1;
    let mut r = 0.5f64;
    for (k, a) in c.iter().enumerate().skip(n / 2 + 1) {
        if *a > 0.0 {
            r = r.min((1e-16 / a).powf(1.0 / k as f64));
        }
    }
    r
}

/// Orbit `w_i = p^i(S(z/λ^M))`; returns the first index whose point lies within `r_small` of `w0`.
fn orbit_to(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    z: Complex64,
    extra_lifts: u32,
    w0: Complex64,
    r_small: f64,
) -> Result<(i64, Complex64)> {
    let m = lift_depth(sys, series, z) + extra_lifts;
    let (mut w, _) = series.eval(z / sys.lambda.powi(m as i32));
    for i in 0..(m as i64 + 2000) {
        if (w - w0).norm() <= r_small {
            return Ok((m as i64 - i, w));
        }
        w = sys.p(w);
        if !(w.norm() < 1e300) {
            break;
        }
    }
    Err(CoreError::NotAttracting(format!(
        "f({z}) is not attracted to {w0}"
    )))
}

fn koenigs_j(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    k: &KoenigsSeries,
    z: Complex64,
    extra: u32,
    r_small: f64,
) -> Result<Complex64> {
    let (power, w) = orbit_to(sys, series, z, extra, k.w0, r_small)?;
    Ok(k.eta.powi(power as i32) * k.eval(w))
}

fn boettcher_re_l(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    b: &FiniteBoettcher,
    z: Complex64,
    extra: u32,
    r_small: f64,
) -> Result<f64> {
    let (power, w) = orbit_to(sys, series, z, extra, b.w0, r_small)?;
    let big_b = b.a.abs().powf(1.0 / (b.k as f64 - 1.0));
    Ok((b.k as f64).powi(power as i32) * (big_b * b.eval(w).norm()).ln())
}

/// First ray (scanning `θ = 2πj/72`) along which `f(t e^{iθ}) → w0`.
pub fn find_attracted_ray(sys: &NormalizedSystem, series: &PowerSeries, w0: Complex64) -> Option<f64> {
    (0..72).map(|j| 2.0 * PI * j as f64 / 72.0).find(|&theta| {
        let dir = Complex64::from_polar(1.0, theta);
        let dists: Vec<f64> = (2..8)
            .map(|k| match evaluate(sys, series, dir * sys.lambda.powi(k)) {
                Ok(e) => (e.value - w0).norm(),
                Err(_) => f64::INFINITY,
            })
            .collect();
        dists.windows(2).all(|w| w[1] <= w[0]) && dists.last().is_some_and(|&d| d < 1e-2)
    })
}

/// Linearized profile of `f` along a ray attracted to the finite fixed point `w0`.
pub fn attracting_asymptotics(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    w0: Complex64,
    theta: f64,
) -> Result<AttractingAsymptotics> {
    const ORDER: usize = 40;
    const PERIODS: usize = 3;
    const SAMPLES: usize = 32;
    let eta = sys.poly.eval_derivative(w0);
    let lnl = sys.lambda.ln();
    let dir = Complex64::from_polar(1.0, theta);
    let u_start = 2.0;
    let us: Vec<f64> = (0..PERIODS * SAMPLES)
        .map(|j| u_start + j as f64 / SAMPLES as f64)
        .collect();
    let zs: Vec<Complex64> = us.iter().map(|&u| dir * sys.lambda.powf(u)).collect();
    if eta.norm() < 1e-12 {
        let fb = finite_boettcher(&sys.poly, w0, ORDER)?;
        let r_small = accurate_radius(fb.coeffs.iter().map(|c| c.abs())).min(0.25);
        let expo = (fb.k as f64).ln() / lnl;
        let mut profile = Vec::new();
        let mut negative = true;
        let mut worst = 0.0f64;
        for &z in &zs {
            let l = boettcher_re_l(sys, series, &fb, z, 0, r_small)?;
            let l_next = boettcher_re_l(sys, series, &fb, z * sys.lambda, 3, r_small)?;
            worst = worst.max((l_next - fb.k as f64 * l).abs() / l.abs().max(1e-300));
            negative &= l < 0.0;
            profile.push(Complex64::new(l / z.norm().powf(expo), 0.0));
        }
        let oscillation = diameter(&profile);
        return Ok(AttractingAsymptotics {
            w0,
            eta,
            exponent: Complex64::new(expo, 0.0),
            theta,
            linearizer: Linearizer::Boettcher { k: fb.k },
            u: us,
            oscillation,
            nonconstant: oscillation > 1e-8,
            profile,
            max_relative_residual: worst,
            fitted_exponent: None,
            re_zl_negative: Some(negative),
        });
    }
    let ks = koenigs_psi(&sys.poly, w0, ORDER)?;
    let r_small = accurate_radius(ks.coeffs.iter().map(|c| c.norm())).min(0.25);
    let exponent = eta.ln() / lnl;
    let mut profile = Vec::new();
    let mut worst = 0.0f64;
    let mut logs = Vec::new();
    for &z in &zs {
        let j = koenigs_j(sys, series, &ks, z, 0, r_small)?;
        let j_next = koenigs_j(sys, series, &ks, z * sys.lambda, 3, r_small)?;
        worst = worst.max((j_next - eta * j).norm() / j.norm().max(1e-300));
        logs.push(j.norm().ln());
        profile.push(j * (-exponent * z.ln()).exp());
    }
    let fitted = harmonic_slope(&us, &logs, lnl);
    let oscillation = diameter(&profile);
    let scale = profile.iter().map(|h| h.norm()).fold(0.0, f64::max);
    Ok(AttractingAsymptotics {
        w0,
        eta,
        exponent,
        theta,
        linearizer: Linearizer::Koenigs,
        u: us,
        nonconstant: oscillation > 1e-6 * scale.max(1e-300),
        oscillation,
        profile,
        max_relative_residual: worst,
        fitted_exponent: fitted,
        re_zl_negative: None,
    })
}

/// Slope of `log|j|` against `log t`, fitted together with two periodic harmonics.
fn harmonic_slope(us: &[f64], logs: &[f64], lnl: f64) -> Option<f64> {
    let rows = us.len();
    let a = DMatrix::from_fn(rows, 6, |i, c| {
        let u = us[i];
        match c {
            0 => 1.0,
            1 => u * lnl,
            2 => (2.0 * PI * u).cos(),
            3 => (2.0 * PI * u).sin(),
            4 => (4.0 * PI * u).cos(),
            _ => (4.0 * PI * u).sin(),
        }
    });
    let b = DVector::from_column_slice(logs);
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(sol[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boettcher_green::{boettcher_coeffs, boettcher_inverse_coeffs};
    use crate::poly_core::{normalize, RealPolynomial};

    fn setup(c: &[i64]) -> (NormalizedSystem, PowerSeries) {
        let s = normalize(&RealPolynomial::from_integers(c).unwrap(), Complex64::zero()).unwrap();
        let ser = solve_taylor(&s, 64).unwrap();
        (s, ser)
    }

    #[test]
    fn exceptional_profiles_are_flat() {
        for c in [&[0, 2, 1][..], &[0, 4, 1]] {
            let (s, ser) = setup(c);
            let prof = extract_f(&s, &ser, 0.0, 3, 16).unwrap();
            assert!(prof.oscillation < 1e-8, "{c:?}: {}", prof.oscillation);
            assert!((prof.mean - 1.0).norm() < 1e-9);
            assert!(prof.positive);
            assert_eq!(classify_constancy(&prof, &s).verdict, Verdict::Constant);
        }
    }

    #[test]
    fn finite_expansion_for_chebyshev() {
        let (s, ser) = setup(&[0, 4, 1]);
        let prof = extract_f(&s, &ser, 0.0, 3, 16).unwrap();
        let table = fourier_coeffs(&prof, s.lambda, 3).unwrap();
        let inv = boettcher_inverse_coeffs(&boettcher_coeffs(&s, 16));
        let a = asymptotic_eval(&s, &table, &inv, Complex64::new(25.0, 0.0), 4).unwrap();
        let want = 2.0 * (5f64.cosh() - 1.0);
        assert!((a.value.re - want).abs() < 1e-9 * want);
    }

    #[test]
    fn superattracting_ray() {
        let (s, ser) = setup(&[0, 2, 1]);
        let w0 = Complex64::new(-1.0, 0.0);
        let a = attracting_asymptotics(&s, &ser, w0, PI).unwrap();
        assert_eq!(a.re_zl_negative, Some(true));
        assert!(a.max_relative_residual < 1e-9);
    }
}
