//! Real zeros of `f`, the counting function `N_f`, the zeta function
//! `ζ_f(s) = Σ ξ^{-s}`, Hadamard data, and the Mellin identities tying them to
//! the periodic factor `F` and the harmonic measure.
//!
//! Zeros come from the exact identity `f(λ^n S(w)) = p^n(w) = 0` for
//! `w ∈ p^{-n}(0)` near 0, where `S` is the local inverse of `f`. A sign scan
//! between consecutive zeros checks completeness.

use crate::asymptotics::FourierTable;
use crate::error::{CoreError, Result};
use crate::exact::to_f64;
use crate::harmonic_measure::{level_sample, mellin_mu, MeasureSample, Preimages, TREE_BUDGET};
use crate::poincare_series::{evaluate, max_modulus, PowerSeries};
use crate::poly_core::{real_julia_interval, JuliaKind, NormalizedSystem};
use crate::quad;
use crate::series;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Sample points per gap in the completeness scan.
const SCAN_POINTS: usize = 6;
/// Harmonics of the log-periodic counting envelope used for the zeta tail.
const TAIL_HARMONICS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroSource {
    Preimage,
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RealZero {
    /// `ξ > 0` with `f(-ξ) = 0`.
    pub xi: f64,
    pub multiplicity: usize,
    pub residual: f64,
    /// Sign change of `f` (simple) or of `f'` with no change of `f` (double) across the zero.
    pub sign_verified: bool,
    pub source: ZeroSource,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroList {
    pub zeros: Vec<RealZero>,
    pub bound: f64,
    /// Preimage depth `n`.
    pub depth: usize,
    /// `λξ` is in the list for every `ξ ≤ X/λ`.
    pub self_similar: bool,
    /// No unexplained sign change was found by the scan.
    pub complete: bool,
    pub max_residual: f64,
}

impl ZeroList {
    pub fn count(&self, x: f64, weighted: bool) -> usize {
        self.zeros
            .iter()
            .filter(|z| z.xi < x)
            .map(|z| if weighted { z.multiplicity } else { 1 })
            .sum()
    }
}

fn real_negative_gate(sys: &NormalizedSystem) -> Result<()> {
    let geo = real_julia_interval(sys)?;
    match (geo.kind, geo.hull) {
        (JuliaKind::Interval | JuliaKind::RealCantor, Some([_, b])) if b <= 1e-12 => Ok(()),
        (kind, _) => Err(CoreError::NotApplicable(format!(
            "zeros are located only when J(p) lies in the non-positive axis (found {kind:?})"
        ))),
    }
}

fn f_real(sys: &NormalizedSystem, series: &PowerSeries, x: f64) -> Result<(f64, f64)> {
    let e = evaluate(sys, series, Complex64::new(x, 0.0))?;
    Ok((e.value.re, e.derivative.re))
}

/// Real preimages of 0 under `p^n` with multiplicities.
fn preimage_tree(sys: &NormalizedSystem, n: usize) -> Result<Vec<(f64, usize)>> {
    if (sys.d as f64).powi(n as i32) > TREE_BUDGET as f64 {
        return Err(CoreError::Budget(format!(
            "{}^{n} preimages exceed the tree budget",
            sys.d
        )));
    }
    let pre = Preimages::new(sys);
    let mut level = vec![(0.0f64, 1usize)];
    for _ in 0..n {
        let mut next: Vec<(f64, usize)> = Vec::with_capacity(level.len() * sys.d);
        for &(y, m) in &level {
            let mut ws = pre.all(Complex64::new(y, 0.0))?;
            ws.sort_by(|a, b| a.re.total_cmp(&b.re));
            let mut i = 0;
            while i < ws.len() {
                let scale = 1.0 + ws[i].norm();
                let mut j = i + 1;
                while j < ws.len() && (ws[j] - ws[i]).norm() < 1e-6 * scale {
                    j += 1;
                }
                let mean = ws[i..j].iter().sum::<Complex64>() / (j - i) as f64;
                if j - i == 1 && mean.im.abs() > 1e-9 * scale {
                    return Err(CoreError::Numeric(format!("non-real preimage {mean} of {y}")));
                }
                next.push((mean.re, m * (j - i)));
                i = j;
            }
        }
        level = next;
    }
    Ok(level)
}

/// Largest `τ` on the ladder `2^{-j}` with `max_{|z|=τ} |f| ≤ R_S / 4`.
fn univalent_radius(sys: &NormalizedSystem, series: &PowerSeries, r_inv: f64) -> f64 {
    let mut tau = series.r_lift.min(1.0);
    while max_modulus(sys, series, tau) > 0.25 * r_inv && tau > 1e-8 {
        tau *= 0.5;
    }
    tau
}

fn inverse_series(series: &PowerSeries) -> (PowerSeries, f64) {
    // Float reversion: the exact one is costly and only float values are used here.
    let inv = PowerSeries::from_float(series::reverse(&series.coeffs, series.order + 1));
    let r = inv.r_conv.min(1e6);
    (inv, r)
}

fn polish(sys: &NormalizedSystem, series: &PowerSeries, xi: f64, multiplicity: usize) -> Result<(f64, f64)> {
    let (v, dv) = f_real(sys, series, -xi)?;
    let mut best = (xi, v.abs());
    if multiplicity == 1 && dv != 0.0 {
        let cand = xi + v / dv;
        let (v2, _) = f_real(sys, series, -cand)?;
        if v2.abs() < best.1 {
            best = (cand, v2.abs());
        }
    }
    Ok(best)
}

fn verify_sign(sys: &NormalizedSystem, series: &PowerSeries, xi: f64, multiplicity: usize) -> Result<bool> {
    let h = 1e-6 * xi;
    let (a, da) = f_real(sys, series, -xi + h)?;
    let (b, db) = f_real(sys, series, -xi - h)?;
    Ok(if multiplicity % 2 == 1 {
        a * b < 0.0
    } else {
        a * b > 0.0 && da * db < 0.0
    })
}

fn bisect(sys: &NormalizedSystem, series: &PowerSeries, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (mut flo, _) = f_real(sys, series, -lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (fm, _) = f_real(sys, series, -mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Zeros `-ξ` of `f` with `0 < ξ ≤ X`.
pub fn find_real_zeros(sys: &NormalizedSystem, series: &PowerSeries, bound: f64) -> Result<ZeroList> {
    real_negative_gate(sys)?;
    if !(bound > 0.0) {
        return Err(CoreError::InvalidInput("search bound must be positive".into()));
    }
    let (inv, r_inv) = inverse_series(series);
    let tau = univalent_radius(sys, series, r_inv);
    let depth = ((bound / tau).ln() / sys.lambda.ln()).ceil().max(0.0) as usize;
    let scale = sys.lambda.powi(depth as i32);
    let tree = preimage_tree(sys, depth)?;
    let mut candidates: Vec<(f64, usize)> = tree
        .into_iter()
        .filter(|&(w, _)| w != 0.0 && w.abs() < 0.5 * r_inv)
        .filter_map(|(w, m)| {
            let s = inv.eval(Complex64::new(w, 0.0)).0.re;
            let xi = -scale * s;
            (xi > 0.0 && xi <= bound).then_some((xi, m))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.dedup_by(|b, a| {
        let same = (a.0 - b.0).abs() < 1e-9 * a.0;
        if same {
            a.1 = a.1.max(b.1);
        }
        same
    });
    let polished: Vec<Result<RealZero>> = candidates
        .par_iter()
        .map(|&(xi, m)| {
            let (xi, residual) = polish(sys, series, xi, m)?;
            Ok(RealZero {
                xi,
                multiplicity: m,
                residual,
                sign_verified: verify_sign(sys, series, xi, m)?,
                source: ZeroSource::Preimage,
            })
        })
        .collect();
    let mut zeros = polished.into_iter().collect::<Result<Vec<_>>>()?;

    let mut edges = vec![0.0];
    edges.extend(zeros.iter().map(|z| z.xi));
    edges.push(bound);
    let found: Vec<Result<Vec<f64>>> = edges
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let ts: Vec<f64> = (1..=SCAN_POINTS)
                .map(|i| a + (b - a) * i as f64 / (SCAN_POINTS + 1) as f64)
                .collect();
            let mut extra = Vec::new();
            let mut prev: Option<(f64, f64)> = None;
            for &t in &ts {
                let (v, _) = f_real(sys, series, -t)?;
                if let Some((pt, pv)) = prev {
                    if pv * v < 0.0 {
                        extra.push(bisect(sys, series, pt, t)?);
                    }
                }
                prev = Some((t, v));
            }
            Ok(extra)
        })
        .collect();
    let mut complete = true;
    for extra in found {
        for xi in extra? {
            complete = false;
            let (v, _) = f_real(sys, series, -xi)?;
            zeros.push(RealZero {
                xi,
                multiplicity: 1,
                residual: v.abs(),
                sign_verified: true,
                source: ZeroSource::Scan,
            });
        }
    }
    zeros.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    let has = |x: f64| zeros.iter().any(|z| (z.xi - x).abs() <= 1e-9 * x);
    let self_similar = zeros
        .iter()
        .filter(|z| z.xi * sys.lambda <= bound * (1.0 - 1e-12))
        .all(|z| has(z.xi * sys.lambda));
    let max_residual = zeros.iter().map(|z| z.residual).fold(0.0, f64::max);
    Ok(ZeroList {
        zeros,
        bound,
        depth,
        self_similar,
        complete,
        max_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountingPoint {
    pub u: f64,
    pub x: f64,
    pub count: usize,
    /// `x^{-ρ} N_f(x)`.
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountingProfile {
    pub weighted: bool,
    pub points: Vec<CountingPoint>,
    /// Max minus min of `x^{-ρ} N_f(x)` over the profile.
    pub oscillation: f64,
}

/// `N_f(x)`: distinct zeros `ξ < x`, or with multiplicity when `weighted`.
pub fn zero_counting(zeros: &ZeroList, x: f64, weighted: bool) -> usize {
    zeros.count(x, weighted)
}

/// `u ↦ λ^{-uρ} N_f(λ^u)` for `u` from `log_λ X - periods` to `log_λ X`.
pub fn counting_profile(
    sys: &NormalizedSystem,
    zeros: &ZeroList,
    periods: usize,
    samples_per_period: usize,
    weighted: bool,
) -> CountingProfile {
    let u_hi = zeros.bound.ln() / sys.lambda.ln();
    let n = periods * samples_per_period;
    let points: Vec<CountingPoint> = (0..=n)
        .map(|j| {
            let u = u_hi - periods as f64 + j as f64 / samples_per_period as f64;
            let x = sys.lambda.powf(u);
            let count = zeros.count(x, weighted);
            CountingPoint {
                u,
                x,
                count,
                normalized: count as f64 * x.powf(-sys.rho),
            }
        })
        .collect();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.normalized), hi.max(p.normalized))
        });
    CountingProfile {
        weighted,
        oscillation: hi - lo,
        points,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeLevel {
    pub n: usize,
    pub radius: f64,
    /// `d^n ν(f(B(0, xλ^{-n})))` for the sampled measure `ν`.
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BridgeReport {
    pub x: f64,
    /// Zeros `|ξ| < x` with multiplicity, including the simple zero at the origin.
    pub count: usize,
    /// Levels `n` and `n + 1` sampled from `μ_n`, the preimage measure of 0.
    pub levels: [BridgeLevel; 2],
    /// `(estimate - count) / stderr` at level `n`.
    pub z_score: f64,
    pub relative_discrepancy: f64,
    /// The two levels agree within 3 combined standard errors.
    pub stable: bool,
    /// Level `n` evaluated on the Brolin-measure sample; differs from the count by `o(d^n)`.
    pub brolin: BridgeLevel,
}

/// Compares `N_f(x)` with `d^n μ_n(f(B(0, xλ^{-n})))` at the smallest admissible `n ≥ n_min`
/// and at `n + 1`, where `μ_n` is sampled by `atoms` random `n`-step backward walks from 0.
/// Membership in `f(B)` is decided through the local inverse of `f`.
#[allow(clippy::too_many_arguments)]
pub fn counting_measure_bridge(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    zeros: &ZeroList,
    sample: &MeasureSample,
    x: f64,
    n_min: usize,
    atoms: usize,
    seed: u64,
) -> Result<BridgeReport> {
    if x > zeros.bound {
        return Err(CoreError::InvalidInput(format!(
            "x = {x} exceeds the zero search bound"
        )));
    }
    let (inv, r_inv) = inverse_series(series);
    let tau = univalent_radius(sys, series, r_inv);
    let n0 = (((x / tau).ln() / sys.lambda.ln()).ceil().max(0.0) as usize).max(n_min);
    let level = |n: usize, pts: &[Complex64]| {
        let radius = x / sys.lambda.powi(n as i32);
        let total = pts.len() as f64;
        let inside = pts
            .par_iter()
            .filter(|&&y| y.norm() < 0.5 * r_inv && inv.eval(y).0.norm() < radius)
            .count() as f64;
        let p = inside / total;
        let dn = (sys.d as f64).powi(n as i32);
        BridgeLevel {
            n,
            radius,
            estimate: dn * p,
            stderr: dn * (p * (1.0 - p) / total).sqrt(),
        }
    };
    let mut levels = Vec::with_capacity(2);
    for (i, n) in [n0, n0 + 1].into_iter().enumerate() {
        let walk = level_sample(
            sys,
            Complex64::new(0.0, 0.0),
            n,
            atoms,
            seed.wrapping_add(i as u64),
        )?;
        levels.push(level(n, &walk.atoms));
    }
    let levels = [levels[0], levels[1]];
    let count = zeros.count(x, true) + 1;
    let diff = (levels[0].estimate - levels[1].estimate).abs();
    let combined = levels[0].stderr.hypot(levels[1].stderr);
    Ok(BridgeReport {
        x,
        count,
        z_score: (levels[0].estimate - count as f64) / levels[0].stderr.max(1e-300),
        relative_discrepancy: (levels[0].estimate - count as f64).abs() / (count as f64).max(1.0),
        stable: diff <= 3.0 * combined.max(1e-300),
        brolin: level(n0, &sample.atoms),
        levels,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HadamardData {
    /// Genus `k = ⌊ρ⌋`.
    pub genus: usize,
    #[serde(serialize_with = "crate::exact::serialize_rationals")]
    pub exact: Option<Vec<BigRational>>,
    pub e: Vec<f64>,
    /// Taylor coefficients `L_ℓ` of `log(f(z)/z)`, `ℓ = 0..=order`.
    #[serde(skip)]
    pub log_series: Vec<f64>,
}

/// `⌊log_λ d⌋`, exact when `λ` is rational.
pub fn genus(sys: &NormalizedSystem) -> usize {
    if sys.is_exact() {
        let lam = sys.lambda_exact();
        let d = BigRational::from_integer((sys.d as i64).into());
        let mut k = 0;
        let mut power = lam.clone();
        while power <= d {
            k += 1;
            power *= lam;
        }
        k
    } else {
        (sys.rho + 1e-12).floor() as usize
    }
}

/// `e_ℓ` from `log(f(z)/z) = Σ_{ℓ ≤ k} (-1)^{ℓ-1} e_ℓ z^ℓ / ℓ + O(z^{k+1})`.
pub fn hadamard_data(sys: &NormalizedSystem, series: &PowerSeries) -> HadamardData {
    let k = genus(sys);
    let len = series.order;
    let sign = |l: usize| if l % 2 == 1 { 1i64 } else { -1 };
    let exact = series.exact.as_ref().map(|a| {
        let log = series::log1(&a[1..], len);
        let e: Vec<BigRational> = (1..=k)
            .map(|l| log[l].clone() * BigRational::from_integer((sign(l) * l as i64).into()))
            .collect();
        (e, log.iter().map(to_f64).collect::<Vec<f64>>())
    });
    let (exact, e, log_series) = match exact {
        Some((e, log)) => (Some(e.clone()), e.iter().map(to_f64).collect(), log),
        None => {
            let log = series::log1(&series.coeffs[1..], len);
            let e = (1..=k).map(|l| log[l] * (sign(l) * l as i64) as f64).collect();
            (None, e, log)
        }
    };
    HadamardData {
        genus: k,
        exact,
        e,
        log_series,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub window: [f64; 2],
    /// Coefficients of `N(x) ≈ x^ρ (a_0 + Σ_j a_j cos 2πju + b_j sin 2πju) + D`, `u = log_λ x`.
    pub a0: f64,
    pub harmonics: Vec<[f64; 2]>,
    pub offset: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZetaReport {
    pub s: Complex64,
    pub weighted: bool,
    pub partial_sum: Complex64,
    pub tail: Complex64,
    pub tail_uncertainty: f64,
    pub value: Complex64,
    pub zeros_used: usize,
    pub bound: f64,
    pub fit: TailFit,
    pub genus: usize,
    pub e: Vec<f64>,
    /// Pole spacing constant `1/log λ`.
    pub sigma: f64,
}

fn fit_tail(sys: &NormalizedSystem, zeros: &ZeroList, weighted: bool) -> Result<TailFit> {
    const POINTS: usize = 2000;
    let hi = zeros.bound;
    let lo = hi / sys.lambda.powi(2);
    let (rlo, rhi) = (lo.powf(sys.rho), hi.powf(sys.rho));
    let xs: Vec<f64> = (0..POINTS)
        .map(|i| (rlo + (rhi - rlo) * (i as f64 + 0.5) / POINTS as f64).powf(1.0 / sys.rho))
        .collect();
    let cols = 2 + 2 * TAIL_HARMONICS;
    let lnl = sys.lambda.ln();
    let a = DMatrix::from_fn(POINTS, cols, |i, c| {
        let x = xs[i];
        let xr = x.powf(sys.rho);
        let u = x.ln() / lnl;
        match c {
            0 => 1.0,
            1 => xr,
            _ => {
                let j = ((c - 2) / 2 + 1) as f64;
                if c % 2 == 0 {
                    xr * (2.0 * PI * j * u).cos()
                } else {
                    xr * (2.0 * PI * j * u).sin()
                }
            }
        }
    });
    let b = DVector::from_iterator(POINTS, xs.iter().map(|&x| zeros.count(x, weighted) as f64));
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| CoreError::Numeric(format!("tail fit: {e}")))?;
    let resid = (&a * &sol - &b).amax();
    Ok(TailFit {
        window: [lo, hi],
        offset: sol[0],
        a0: sol[1],
        harmonics: (0..TAIL_HARMONICS)
            .map(|j| [sol[2 + 2 * j], sol[3 + 2 * j]])
            .collect(),
        max_residual: resid,
    })
}

/// `∫_a^∞ x^{-s} dN(x)` under the fitted envelope.
fn tail_integral(sys: &NormalizedSystem, fit: &TailFit, a: f64, n_a: f64, s: Complex64) -> Complex64 {
    let lnl = sys.lambda.ln();
    let pw = |e: Complex64| (e * a.ln()).exp();
    let mut acc = -pw(-s) * n_a + pw(-s) * fit.offset;
    let mut term = |coef: Complex64, omega: f64| {
        let e = Complex64::new(sys.rho, omega) - s;
        acc += s * coef * pw(e) / (-e);
    };
    term(Complex64::new(fit.a0, 0.0), 0.0);
    for (j, [c, sn]) in fit.harmonics.iter().enumerate() {
        let omega = 2.0 * PI * (j + 1) as f64 / lnl;
        // c cos + s sin = (c - i s)/2 e^{iωt} + (c + i s)/2 e^{-iωt}
        term(Complex64::new(*c, -*sn) * 0.5, omega);
        term(Complex64::new(*c, *sn) * 0.5, -omega);
    }
    acc
}

/// `ζ_f(s) = Σ ξ^{-s}` over zeros up to the bound plus a tail from the fitted counting envelope.
pub fn zeta(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    zeros: &ZeroList,
    s: Complex64,
    weighted: bool,
) -> Result<ZetaReport> {
    if s.re <= sys.rho {
        return Err(CoreError::Divergence {
            re_s: s.re,
            rho: sys.rho,
        });
    }
    let partial_sum: Complex64 = zeros
        .zeros
        .iter()
        .map(|z| (-s * z.xi.ln()).exp() * if weighted { z.multiplicity as f64 } else { 1.0 })
        .sum();
    let fit = fit_tail(sys, zeros, weighted)?;
    let a = zeros.bound;
    let n_a = zeros.count(a * (1.0 + 1e-15), weighted) as f64;
    let tail = tail_integral(sys, &fit, a, n_a, s);
    // Unmodelled remainder of the counting function, integrated against |s| x^{-Re s - 1}.
    let tail_uncertainty = fit.max_residual * s.norm() / s.re * a.powf(-s.re);
    let had = hadamard_data(sys, series);
    Ok(ZetaReport {
        s,
        weighted,
        partial_sum,
        tail,
        tail_uncertainty,
        value: partial_sum + tail,
        zeros_used: zeros.zeros.len(),
        bound: a,
        fit,
        genus: had.genus,
        e: had.e,
        sigma: 1.0 / sys.lambda.ln(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MellinIdentityEntry {
    pub s: Complex64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub defect: f64,
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MellinIdentityReport {
    pub entries: Vec<MellinIdentityEntry>,
    pub max_defect: f64,
}

/// `∫_0^∞ (log f(x) - log x - Σ_{ℓ≤k} L_ℓ x^ℓ) x^{-s-1} dx` against `ζ_f(s) π / (s sin πs)`,
/// with zeros counted by multiplicity. The integral is split into a series head,
/// Gauss-Legendre quadrature in `log x`, and a tail from the Fourier table of `F`.
pub fn mellin_identity_check(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    zeros: &ZeroList,
    table: &FourierTable,
    s_grid: &[Complex64],
) -> Result<MellinIdentityReport> {
    let had = hadamard_data(sys, series);
    let k = had.genus;
    let log_s = &had.log_series;
    for s in s_grid {
        if !(s.re > sys.rho && s.re < (k + 1) as f64) {
            return Err(CoreError::InvalidInput(format!(
                "identity holds for {} < Re s < {}; got {s}",
                sys.rho,
                k + 1
            )));
        }
    }
    let first_zero = zeros.zeros.first().map_or(1.0, |z| z.xi);
    let x_min = (first_zero * 1e-3).min(1e-2);
    let lnl = sys.lambda.ln();
    let f_mean = table.get(0).map_or(1.0, |e| e.value.re);
    let x_max = (40.0 / f_mean).powf(1.0 / sys.rho);
    let t_lo = x_min.ln();
    let t_hi = x_max.ln();
    let poly_k = |x: f64| (1..=k).map(|l| log_s[l] * x.powi(l as i32)).sum::<f64>();
    let mid_values = |panels: usize| -> Result<Vec<(f64, f64)>> {
        let (nodes, weights) = quad::gauss_legendre(16);
        let h = (t_hi - t_lo) / panels as f64;
        let pts: Vec<(f64, f64)> = (0..panels)
            .flat_map(|p| {
                let mid = t_lo + (p as f64 + 0.5) * h;
                nodes
                    .iter()
                    .zip(&weights)
                    .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
                    .collect::<Vec<_>>()
            })
            .collect();
        pts.par_iter()
            .map(|&(t, w)| {
                let x = t.exp();
                let fx = evaluate(sys, series, Complex64::new(x, 0.0))?.value.re;
                if !(fx > 0.0) {
                    return Err(CoreError::Numeric(format!("f({x}) = {fx} is not positive")));
                }
                Ok((t, w * ((fx / x).ln() - poly_k(x))))
            })
            .collect()
    };
    let coarse = mid_values(32)?;
    let fine = mid_values(64)?;
    let integrate = |vals: &[(f64, f64)], s: Complex64| -> Complex64 {
        vals.iter().map(|&(t, g)| g * (-s * t).exp()).sum()
    };
    let mut entries = Vec::new();
    for &s in s_grid {
        let head: Complex64 = (k + 1..log_s.len())
            .map(|l| {
                let e = Complex64::new(l as f64, 0.0) - s;
                log_s[l] * (e * x_min.ln()).exp() / e
            })
            .sum();
        let mid = integrate(&fine, s);
        let quadrature_error = (mid - integrate(&coarse, s)).norm();
        let px = |e: Complex64| (e * x_max.ln()).exp();
        let mut tail = -px(-s) * (x_max.ln() / s + 1.0 / (s * s));
        for entry in &table.entries {
            let e = Complex64::new(sys.rho, 2.0 * PI * entry.k as f64 / lnl) - s;
            tail += entry.value * px(e) / (-e);
        }
        for (l, c) in log_s.iter().enumerate().take(k + 1).skip(1) {
            tail -= c * px(Complex64::new(l as f64, 0.0) - s) / (s - l as f64);
        }
        let lhs = head + mid + tail;
        let z = zeta(sys, series, zeros, s, true)?;
        let rhs = z.value * PI / (s * (PI * s).sin());
        entries.push(MellinIdentityEntry {
            s,
            lhs,
            rhs,
            defect: (lhs - rhs).norm() / rhs.norm().max(1e-300),
            quadrature_error,
        });
    }
    let max_defect = entries.iter().map(|e| e.defect).fold(0.0, f64::max);
    Ok(MellinIdentityReport { entries, max_defect })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoleApproachPoint {
    pub s: Complex64,
    pub zeta: Complex64,
    pub m_mu_neg: Complex64,
    pub combination: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleCancellation {
    pub k: i32,
    pub points: Vec<PoleApproachPoint>,
    /// Change of `ζ_f(s) + M_μ(-s)` over the path divided by the change of `ζ_f`.
    pub growth_ratio: f64,
    pub bounded: bool,
}

/// Approaches `s = ρ + 2πik/log λ` from the right and tracks the regular
/// combination `ζ_f(s) + M_μ(-s)` (zeros with multiplicity).
pub fn pole_cancellation(
    sys: &NormalizedSystem,
    series: &PowerSeries,
    zeros: &ZeroList,
    sample: &MeasureSample,
    k: i32,
    offsets: &[f64],
) -> Result<PoleCancellation> {
    if offsets.len() < 2 {
        return Err(CoreError::InvalidInput("need at least two offsets".into()));
    }
    let im = 2.0 * PI * k as f64 / sys.lambda.ln();
    let mut points = Vec::new();
    for &delta in offsets {
        let s = Complex64::new(sys.rho + delta, im);
        let z = zeta(sys, series, zeros, s, true)?.value;
        let m = mellin_mu(sys, sample, -s)?
            .m_mu
            .ok_or_else(|| CoreError::Numeric(format!("M_mu has a pole at {}", -s)))?;
        points.push(PoleApproachPoint {
            s,
            zeta: z,
            m_mu_neg: m,
            combination: z + m,
        });
    }
    let first = points.first().expect("offsets");
    let last = points.last().expect("offsets");
    let growth_ratio =
        (last.combination - first.combination).norm() / (last.zeta - first.zeta).norm().max(1e-300);
    Ok(PoleCancellation {
        k,
        bounded: growth_ratio < 0.2,
        growth_ratio,
        points,
    })
}
