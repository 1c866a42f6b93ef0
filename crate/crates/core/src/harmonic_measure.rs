//! Monte-Carlo approximation of the harmonic (Brolin) measure by backward
//! iteration, ball masses, and the Mellin transform with its continuation.

use crate::error::{CoreError, Result};
use crate::poly_core::NormalizedSystem;
use crate::roots;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const BURN_IN: usize = 20;
pub const CHUNK: usize = 4096;
pub const TREE_BUDGET: usize = 1 << 20;
/// Offset from the repelling fixed point used to build the start point `p(ε)`.
pub const START_OFFSET: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    FullTree,
    RandomBackward,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSample {
    pub atoms: Vec<Complex64>,
    pub depth: usize,
    pub seed: Option<u64>,
    pub mode: SampleMode,
    pub start: Complex64,
}

impl MeasureSample {
    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }
}

/// Inverse branches of a normalized polynomial at `x`.
pub struct Preimages {
    coeffs: Vec<Complex64>,
    quadratic: Option<f64>,
}

impl Preimages {
    pub fn new(sys: &NormalizedSystem) -> Self {
        let quadratic = (sys.d == 2).then_some(sys.lambda);
        Self {
            coeffs: sys.poly.coeffs_c(),
            quadratic,
        }
    }

    /// All `d` solutions of `p(w) = x`.
    pub fn all(&self, x: Complex64) -> Result<Vec<Complex64>> {
        match self.quadratic {
            // w^2 + λw - x = 0
            Some(lam) => Ok(roots::quadratic(1.0.into(), lam.into(), -x).to_vec()),
            None => {
                let mut c = self.coeffs.clone();
                c[0] -= x;
                roots::roots(&c)
            }
        }
    }

    fn pick(&self, x: Complex64, branch: usize) -> Result<Complex64> {
        let all = self.all(x)?;
        Ok(all[branch % all.len()])
    }
}

pub fn default_start(sys: &NormalizedSystem) -> Complex64 {
    sys.p(Complex64::new(START_OFFSET, 0.0))
}

/// `count` atoms, each the end of an `n + BURN_IN` step walk with uniformly random inverse branches.
pub fn backward_orbit_sample(
    sys: &NormalizedSystem,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<MeasureSample> {
    let start = default_start(sys);
    let atoms = random_walks(sys, start, n + BURN_IN, count, seed)?;
    Ok(MeasureSample {
        atoms,
        depth: n,
        seed: Some(seed),
        mode: SampleMode::RandomBackward,
        start,
    })
}

/// Random sample of `μ_n = d^{-n} Σ_{p^n(x) = start} δ_x` (exactly `n` steps, no burn-in).
pub fn level_sample(
    sys: &NormalizedSystem,
    start: Complex64,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<MeasureSample> {
    Ok(MeasureSample {
        atoms: random_walks(sys, start, n, count, seed)?,
        depth: n,
        seed: Some(seed),
        mode: SampleMode::RandomBackward,
        start,
    })
}

fn random_walks(
    sys: &NormalizedSystem,
    start: Complex64,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let pre = Preimages::new(sys);
    let d = sys.d;
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<Complex64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let mut x = start;
                for _ in 0..steps {
                    x = pre.pick(x, rng.gen_range(0..d))?;
                }
                out.push(x);
            }
            Ok(out)
        })
        .collect();
    let mut atoms = Vec::with_capacity(count);
    for part in parts {
        atoms.extend(part?);
    }
    Ok(atoms)
}

/// All `d^n` preimages of `start` under `p^n`, with multiplicity.
pub fn full_preimage_tree(sys: &NormalizedSystem, n: usize, start: Complex64) -> Result<MeasureSample> {
    let size = (sys.d as f64).powi(n as i32);
    if size > TREE_BUDGET as f64 {
        return Err(CoreError::Budget(format!("{}^{n} atoms exceed 2^20", sys.d)));
    }
    let pre = Preimages::new(sys);
    let mut level = vec![start];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * sys.d);
        for x in level {
            next.extend(pre.all(x)?);
        }
        level = next;
    }
    Ok(MeasureSample {
        atoms: level,
        depth: n,
        seed: None,
        mode: SampleMode::FullTree,
        start,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// `μ(B(0, t))` with binomial standard error.
pub fn ball_mass(sample: &MeasureSample, t: f64) -> Estimate {
    let n = sample.atoms.len() as f64;
    let inside = sample.atoms.iter().filter(|x| x.norm() < t).count() as f64;
    let m = inside / n;
    Estimate {
        value: m,
        stderr: (m * (1.0 - m) / n).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub stderr: f64,
}

fn mean_estimate<I: IndexedParallelIterator<Item = Complex64>>(values: I) -> ComplexEstimate {
    let v: Vec<Complex64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<Complex64>() / n;
    let var = v.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0).max(1.0);
    ComplexEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Principal `(-x)^s`; zero at `x = 0` (the case `Re s > 0`).
pub fn neg_pow(x: Complex64, s: Complex64) -> Complex64 {
    if x.is_zero() {
        return Complex64::zero();
    }
    (s * (-x).ln()).exp()
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        z * (1.0 + z * (0.5 + z / 6.0))
    } else {
        z.exp() - 1.0
    }
}

/// Per-atom integrand of `H(s) = Σ_k (-λ w_k(x))^s - (-x)^s`. The preimage
/// closest to `x/λ` is paired with `(-x)^s` to avoid cancellation near 0.
pub fn h_integrand(pre: &Preimages, lambda: f64, x: Complex64, s: Complex64) -> Result<Complex64> {
    let ws = pre.all(x)?;
    if x.is_zero() {
        return Ok(ws
            .iter()
            .filter(|w| !w.is_zero())
            .map(|&w| neg_pow(lambda * w, s))
            .sum());
    }
    let ratio = |w: Complex64| lambda * w / x;
    let near = (0..ws.len())
        .min_by(|&a, &b| {
            (ratio(ws[a]) - 1.0)
                .norm()
                .total_cmp(&(ratio(ws[b]) - 1.0).norm())
        })
        .expect("at least one preimage");
    let mut acc = neg_pow(x, s) * expm1(s * ratio(ws[near]).ln());
    for (k, &w) in ws.iter().enumerate() {
        if k != near {
            acc += neg_pow(lambda * w, s);
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct MellinReport {
    pub s: Complex64,
    /// `M_μ(s)`; absent at poles of `1/(dλ^s - 1)`.
    pub m_mu: Option<Complex64>,
    pub m_mu_stderr: Option<f64>,
    pub h: Complex64,
    pub h_stderr: f64,
    /// Direct average of `(-x)^s`, available for `Re s > 0`.
    pub direct: Option<ComplexEstimate>,
    pub at_pole: bool,
    pub branch_note: String,
}

pub fn mellin_mu(sys: &NormalizedSystem, sample: &MeasureSample, s: Complex64) -> Result<MellinReport> {
    if s.re <= -sys.rho - 1.0 {
        return Err(CoreError::InvalidInput(format!(
            "continuation requires Re s > -rho - 1 = {}",
            -sys.rho - 1.0
        )));
    }
    let pre = Preimages::new(sys);
    let lam = sys.lambda;
    let hs: Vec<Complex64> = sample
        .atoms
        .par_iter()
        .map(|&x| h_integrand(&pre, lam, x, s))
        .collect::<Result<_>>()?;
    let h = mean_estimate(hs.into_par_iter());
    let direct = (s.re > 0.0).then(|| mean_estimate(sample.atoms.par_iter().map(|&x| neg_pow(x, s))));
    let denom = sys.d as f64 * (s * lam.ln()).exp() - 1.0;
    let at_pole = denom.norm() < 1e-12;
    let (m_mu, m_mu_stderr) = match (&direct, at_pole) {
        (Some(dir), _) => (Some(dir.value), Some(dir.stderr)),
        (None, false) => (Some(h.value / denom), Some(h.stderr / denom.norm())),
        (None, true) => (None, None),
    };
    let branch_note = if sample.atoms.iter().all(|x| x.im.abs() < 1e-9 && x.re <= 1e-12) {
        "principal Log(-x); atoms lie on the non-positive axis so no cut is crossed".into()
    } else {
        "principal Log(-x); cut along the positive real axis of x".into()
    };
    Ok(MellinReport {
        s,
        m_mu,
        m_mu_stderr,
        h: h.value,
        h_stderr: h.stderr,
        direct,
        at_pole,
        branch_note,
    })
}

/// Average of `φ` against the sample.
pub fn integrate<F: Fn(Complex64) -> f64 + Sync>(sample: &MeasureSample, phi: F) -> Estimate {
    let v: Vec<f64> = sample.atoms.par_iter().map(|&x| phi(x)).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// `(1/d) Σ_branches ∫ φ∘branch dμ`, the right side of the invariance relation.
pub fn integrate_pulled_back<F: Fn(Complex64) -> f64 + Sync>(
    sys: &NormalizedSystem,
    sample: &MeasureSample,
    phi: F,
) -> Result<Estimate> {
    let pre = Preimages::new(sys);
    let d = sys.d as f64;
    let v: Vec<f64> = sample
        .atoms
        .par_iter()
        .map(|&x| pre.all(x).map(|ws| ws.iter().map(|&w| phi(w)).sum::<f64>() / d))
        .collect::<Result<_>>()?;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::{normalize, RealPolynomial};

    fn sys(c: &[i64]) -> NormalizedSystem {
        normalize(&RealPolynomial::from_integers(c).unwrap(), Complex64::zero()).unwrap()
    }

    #[test]
    fn one_level_tree() {
        let s = sys(&[0, 5, 1]);
        let t = full_preimage_tree(&s, 1, Complex64::new(-4.0, 0.0)).unwrap();
        let mut re: Vec<f64> = t.atoms.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 4.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
        let t0 = full_preimage_tree(&s, 0, Complex64::new(-4.0, 0.0)).unwrap();
        assert_eq!(t0.atoms, vec![Complex64::new(-4.0, 0.0)]);
        assert!(full_preimage_tree(&s, 21, Complex64::zero()).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = sys(&[0, 4, 1]);
        let a = backward_orbit_sample(&s, 10, 5000, 7).unwrap();
        let b = backward_orbit_sample(&s, 10, 5000, 7).unwrap();
        assert_eq!(a.atoms, b.atoms);
        let c = backward_orbit_sample(&s, 10, 5000, 8).unwrap();
        assert_ne!(a.atoms, c.atoms);
    }

    #[test]
    fn circle_case_moments() {
        let s = sys(&[0, 2, 1]);
        let sample = backward_orbit_sample(&s, 20, 20_000, 1).unwrap();
        let mean: Complex64 = sample.atoms.iter().sum::<Complex64>() / sample.atoms.len() as f64;
        assert!((mean + 1.0).norm() < 0.03, "{mean}");
        let m1 = mellin_mu(&s, &sample, Complex64::new(1.0, 0.0)).unwrap();
        assert!((m1.m_mu.unwrap() - 1.0).norm() < 0.03);
    }

    #[test]
    fn continuation_matches_direct() {
        let s = sys(&[0, 4, 1]);
        let sample = backward_orbit_sample(&s, 20, 40_000, 3).unwrap();
        let z = Complex64::new(0.7, 0.4);
        let r = mellin_mu(&s, &sample, z).unwrap();
        let denom = 2.0 * (z * 4f64.ln()).exp() - 1.0;
        let cont = r.h / denom;
        let dir = r.direct.unwrap();
        let tol = 3.0 * (dir.stderr + r.h_stderr / denom.norm());
        assert!((cont - dir.value).norm() < tol, "{cont} vs {}", dir.value);
    }

    #[test]
    fn ball_mass_is_monotone_and_saturates() {
        let s = sys(&[0, 5, 1]);
        let sample = backward_orbit_sample(&s, 10, 4096, 2).unwrap();
        let mut prev = 0.0;
        for t in [0.01, 0.1, 1.0, 3.0, 5.5] {
            let m = ball_mass(&sample, t).value;
            assert!(m >= prev);
            prev = m;
        }
        assert_eq!(prev, 1.0);
    }
}
