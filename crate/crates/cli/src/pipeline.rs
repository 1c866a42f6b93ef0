//! Stage orchestration. Each stage turns the shared state into a JSON value;
//! stages whose preconditions fail are skipped with a reason instead of failing.

use crate::config::{Command, Prepared};
use num_complex::Complex64;
use poincare_core::asymptotics::{
    attracting_asymptotics, classify_constancy, extract_f, find_attracted_ray, fourier_coeffs, residue_table,
};
use poincare_core::boettcher_green::{
    boettcher_coeffs, boettcher_identity_exact, boettcher_inverse_coeffs, DEFAULT_LAURENT_ORDER,
};
use poincare_core::harmonic_measure::{backward_orbit_sample, mellin_mu};
use poincare_core::poincare_series::{evaluate, formal_residual_vanishes, solve_taylor};
use poincare_core::poly_core::{
    attracting_count_bound, audit_multipliers, classify_exceptional, closed_form_oracle, fixed_points,
    real_julia_interval, FixedPointClass,
};
use poincare_core::zeros_zeta::{
    counting_measure_bridge, counting_profile, find_real_zeros, genus, hadamard_data, mellin_identity_check,
    pole_cancellation, zero_counting, zeta,
};
use poincare_core::{CoreError, FourierTable, MeasureSample, PowerSeries, ZeroList};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const FOURIER_K: usize = 3;
const PROFILE_PERIODS: usize = 4;
const PROFILE_SAMPLES: usize = 32;
const COUNTING_SAMPLES: usize = 32;
const POLE_OFFSETS: [f64; 3] = [0.4, 0.2, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Analyze,
    Series,
    Eval,
    Measure,
    Fourier,
    Attracting,
    Zeros,
    Zeta,
    Bridge,
}

impl Stage {
    const ORDER: [Stage; 9] = [
        Stage::Analyze,
        Stage::Series,
        Stage::Eval,
        Stage::Measure,
        Stage::Fourier,
        Stage::Attracting,
        Stage::Zeros,
        Stage::Zeta,
        Stage::Bridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Analyze => "analyze",
            Stage::Series => "series",
            Stage::Eval => "eval",
            Stage::Measure => "measure",
            Stage::Fourier => "fourier",
            Stage::Attracting => "attracting",
            Stage::Zeros => "zeros",
            Stage::Zeta => "zeta",
            Stage::Bridge => "bridge",
        }
    }

    fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Analyze | Stage::Series | Stage::Measure => &[],
            Stage::Eval | Stage::Fourier | Stage::Attracting | Stage::Zeros => &[Stage::Series],
            Stage::Zeta => &[Stage::Zeros],
            Stage::Bridge => &[Stage::Zeros, Stage::Measure],
        }
    }
}

fn stages_for(command: Command) -> Vec<Stage> {
    use Stage::*;
    let wanted: &[Stage] = match command {
        Command::Analyze => &[Analyze],
        Command::Series => &[Analyze, Series],
        Command::Eval => &[Analyze, Series, Eval],
        Command::Measure => &[Analyze, Measure],
        Command::Fourier => &[Analyze, Series, Measure, Fourier, Attracting],
        Command::Zeros => &[Analyze, Series, Zeros],
        Command::Zeta => &[Analyze, Series, Measure, Fourier, Zeros, Zeta],
        Command::Bridge => &[Analyze, Series, Measure, Zeros, Bridge],
        Command::All => &Stage::ORDER,
    };
    Stage::ORDER.into_iter().filter(|s| wanted.contains(s)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip)]
    pub elapsed: Duration,
}

enum Halt {
    Skip(String),
    Fail(String),
}

impl From<CoreError> for Halt {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotApplicable(_) | CoreError::NotEscaping(_) | CoreError::NotAttracting(_) => {
                Halt::Skip(e.to_string())
            }
            other => Halt::Fail(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for Halt {
    fn from(e: serde_json::Error) -> Self {
        Halt::Fail(format!("serialization: {e}"))
    }
}

impl From<csv::Error> for Halt {
    fn from(e: csv::Error) -> Self {
        Halt::Fail(format!("csv: {e}"))
    }
}

type StageResult = Result<Value, Halt>;

/// Everything produced by one run, ready to be written.
pub struct RunOutput {
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
    /// CSV files as `(name, contents)`, in a fixed order.
    pub files: Vec<(&'static str, Vec<u8>)>,
}

impl RunOutput {
    pub fn failed(&self) -> bool {
        self.stages.iter().any(|s| s.status == Status::Failed)
    }
}

struct State<'a> {
    prep: &'a Prepared,
    series: Option<PowerSeries>,
    sample: Option<MeasureSample>,
    fft: Option<FourierTable>,
    zeros: Option<ZeroList>,
    warnings: Vec<String>,
    files: Vec<(&'static str, Vec<u8>)>,
}

pub fn run(prep: &Prepared) -> RunOutput {
    let mut st = State {
        prep,
        series: None,
        sample: None,
        fft: None,
        zeros: None,
        warnings: Vec::new(),
        files: Vec::new(),
    };
    let mut records: Vec<StageRecord> = Vec::new();
    for stage in stages_for(prep.config.command) {
        let start = Instant::now();
        let blocked = stage.requires().iter().find_map(|dep| {
            records
                .iter()
                .find(|r| r.stage == *dep && r.status != Status::Ok)
                .map(|r| format!("requires the {} stage, which did not complete", r.stage.name()))
        });
        let outcome = match blocked {
            Some(reason) => Err(Halt::Skip(reason)),
            None => st.run_stage(stage),
        };
        let (status, reason, result) = match outcome {
            Ok(v) => (Status::Ok, None, Some(v)),
            Err(Halt::Skip(r)) => {
                st.warnings.push(format!("{} skipped: {r}", stage.name()));
                (Status::Skipped, Some(r), None)
            }
            Err(Halt::Fail(r)) => (Status::Failed, Some(r), None),
        };
        records.push(StageRecord {
            stage,
            status,
            reason,
            result,
            elapsed: start.elapsed(),
        });
    }
    RunOutput {
        stages: records,
        warnings: st.warnings,
        files: st.files,
    }
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, Halt>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Halt::Fail(format!("csv: {e}")))
}

/// Shortest round-trip text for a float (scientific form for small magnitudes).
fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        x.to_string()
    }
}

fn default_points() -> Vec<Complex64> {
    let mut out = Vec::new();
    for r in [0.5, 2.0, 10.0, 50.0] {
        for t in [0.0, 0.5 * PI, PI] {
            out.push(Complex64::from_polar(r, t));
        }
    }
    out
}

impl State<'_> {
    fn run_stage(&mut self, stage: Stage) -> StageResult {
        match stage {
            Stage::Analyze => self.analyze(),
            Stage::Series => self.series(),
            Stage::Eval => self.eval(),
            Stage::Measure => self.measure(),
            Stage::Fourier => self.fourier(),
            Stage::Attracting => self.attracting(),
            Stage::Zeros => self.zeros(),
            Stage::Zeta => self.zeta(),
            Stage::Bridge => self.bridge(),
        }
    }

    fn analyze(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let geometry = real_julia_interval(sys)?;
        let audit = match audit_multipliers(sys) {
            Ok(a) => serde_json::to_value(a)?,
            Err(e @ CoreError::NotApplicable(_)) => {
                self.warnings.push(format!("multiplier audit skipped: {e}"));
                Value::Null
            }
            Err(e) => return Err(e.into()),
        };
        Ok(json!({
            "fixed_points": fixed_points(&self.prep.input)?,
            "normalized_fixed_points": fixed_points(&sys.poly)?,
            "geometry": geometry,
            "exceptional": classify_exceptional(sys),
            "closed_form": closed_form_oracle(sys),
            "audit": audit,
            "attracting_count": attracting_count_bound(&self.prep.input)?,
        }))
    }

    fn series(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = solve_taylor(sys, self.prep.config.order)?;
        if ser.exact_degraded {
            self.warnings
                .push("exact coefficients exceeded the bit budget; continued in floating point".into());
        }
        let b = boettcher_coeffs(sys, DEFAULT_LAURENT_ORDER);
        let value = json!({
            "order": ser.order,
            "exact": ser.exact.is_some(),
            "exact_degraded": ser.exact_degraded,
            "r_conv": ser.r_conv,
            "r_lift": ser.r_lift,
            "coefficients": ser.coeffs,
            "coefficients_exact": ser.exact.as_ref().map(|a| a.iter().map(poincare_core::exact::format_rational).collect::<Vec<_>>()),
            "formal_identity_exact": formal_residual_vanishes(sys, &ser),
            "hadamard": hadamard_data(sys, &ser),
            "boettcher": {
                "identity_exact": boettcher_identity_exact(sys, &b),
                "inverse": boettcher_inverse_coeffs(&b),
                "coefficients": b,
            },
        });
        self.series = Some(ser);
        Ok(value)
    }

    fn eval(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = self.series.as_ref().expect("series stage ran");
        let oracle = closed_form_oracle(sys);
        let points = if self.prep.config.at.is_empty() {
            default_points()
        } else {
            self.prep.config.at.clone()
        };
        let tol = self.prep.config.tol;
        let mut rows = Vec::new();
        let mut flagged = Vec::new();
        for z in points {
            let e = evaluate(sys, ser, z)?;
            let lifted = evaluate(sys, ser, z * sys.lambda)?.value;
            let fe = (lifted - sys.p(e.value)).norm() / lifted.norm().max(1.0);
            if fe > tol || e.warning {
                flagged.push(z);
            }
            let closed = oracle.as_ref().map(|c| {
                let want = c.eval(z);
                (e.value - want).norm() / want.norm().max(1e-300)
            });
            rows.push(json!({
                "z": z,
                "result": e,
                "functional_equation_residual": fe,
                "closed_form_relative_error": closed,
            }));
        }
        for z in &flagged {
            self.warnings
                .push(format!("evaluation at {z} exceeds tolerance {tol:e}"));
        }
        Ok(json!({ "tol": tol, "points": rows, "flagged": flagged.len() }))
    }

    fn measure(&mut self) -> StageResult {
        let c = &self.prep.config;
        let sys = &self.prep.system;
        let sample = backward_orbit_sample(sys, c.depth, c.atoms, c.seed)?;
        let moments = [1.0, 2.0]
            .into_iter()
            .map(|s| mellin_mu(sys, &sample, Complex64::new(s, 0.0)))
            .collect::<poincare_core::Result<Vec<_>>>()?;
        let depth = sample.depth.to_string();
        let csv = csv_bytes(
            &["x_re", "x_im", "depth"],
            sample.atoms.iter().map(|x| [num(x.re), num(x.im), depth.clone()]),
        )?;
        self.files.push(("measure.csv", csv));
        let value = json!({
            "atoms": sample.atoms.len(),
            "depth": sample.depth,
            "seed": sample.seed,
            "mode": sample.mode,
            "start": sample.start,
            "moments": moments,
        });
        self.sample = Some(sample);
        Ok(value)
    }

    fn fourier(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = self.series.as_ref().expect("series stage ran");
        let profile = extract_f(sys, ser, 0.0, PROFILE_PERIODS, PROFILE_SAMPLES)?;
        let constancy = classify_constancy(&profile, sys);
        let fft = fourier_coeffs(&profile, sys.lambda, FOURIER_K)?;
        let residue = match &self.sample {
            Some(sample) => Some(residue_table(sys, sample, FOURIER_K)?),
            None => {
                self.warnings
                    .push("no measure sample: residue-route Fourier table omitted".into());
                None
            }
        };
        let comparison: Vec<Value> = residue
            .iter()
            .flat_map(|res| {
                fft.entries.iter().filter_map(|a| {
                    let b = res.get(a.k)?;
                    let diff = (a.value - b.value).norm();
                    let sigma = a.uncertainty.hypot(b.uncertainty);
                    Some(json!({
                        "k": a.k,
                        "difference": diff,
                        "combined_uncertainty": sigma,
                        "ratio": diff / sigma.max(1e-300),
                    }))
                })
            })
            .collect();
        let csv = csv_bytes(
            &["u", "re_F", "im_F"],
            profile
                .u
                .iter()
                .zip(&profile.values)
                .map(|(u, v)| [num(*u), num(v.re), num(v.im)]),
        )?;
        self.files.push(("profile_F.csv", csv));
        let value = json!({
            "profile": {
                "theta": profile.theta,
                "periods": profile.periods,
                "samples_per_period": profile.samples_per_period,
                "mean": profile.mean,
                "oscillation": profile.oscillation,
                "periodicity_defect": profile.periodicity_defect,
                "noise_floor": profile.noise_floor,
                "positive": profile.positive,
            },
            "constancy": constancy,
            "fft": fft,
            "residue": residue,
            "comparison": comparison,
        });
        self.fft = Some(fft);
        Ok(value)
    }

    fn attracting(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = self.series.as_ref().expect("series stage ran");
        let candidates: Vec<Complex64> = fixed_points(&sys.poly)?
            .into_iter()
            .filter(|f| {
                matches!(
                    f.class,
                    FixedPointClass::Attracting | FixedPointClass::Superattracting
                )
            })
            .map(|f| f.location)
            .collect();
        if candidates.is_empty() {
            return Err(Halt::Skip("no attracting fixed point".into()));
        }
        let mut found = Vec::new();
        for w0 in candidates {
            match find_attracted_ray(sys, ser, w0) {
                Some(theta) => found.push(attracting_asymptotics(sys, ser, w0, theta)?),
                None => self
                    .warnings
                    .push(format!("no ray from 0 is attracted to the fixed point {w0}")),
            }
        }
        if found.is_empty() {
            return Err(Halt::Skip("no attracted ray found".into()));
        }
        Ok(serde_json::to_value(found)?)
    }

    fn zeros(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = self.series.as_ref().expect("series stage ran");
        let bound = self.prep.config.bound;
        let zeros = find_real_zeros(sys, ser, bound)?;
        if !zeros.complete {
            self.warnings
                .push("zero scan found sign changes it could not explain".into());
        }
        let csv = csv_bytes(
            &["xi", "multiplicity", "residual", "sign_verified", "source"],
            zeros.zeros.iter().map(|z| {
                [
                    num(z.xi),
                    z.multiplicity.to_string(),
                    num(z.residual),
                    z.sign_verified.to_string(),
                    format!("{:?}", z.source).to_lowercase(),
                ]
            }),
        )?;
        self.files.push(("zeros.csv", csv));
        // N_f on a log grid from below the first zero up to the bound.
        let lo = zeros.zeros.first().map_or(1.0, |z| z.xi).min(1.0);
        let lnl = sys.lambda.ln();
        let steps = ((bound / lo).ln() / lnl * COUNTING_SAMPLES as f64).ceil() as usize;
        let grid: Vec<f64> = (0..=steps)
            .map(|j| (lo * (j as f64 * lnl / COUNTING_SAMPLES as f64).exp()).min(bound))
            .collect();
        let csv = csv_bytes(
            &["x", "N_f"],
            grid.iter()
                .map(|&x| [num(x), zero_counting(&zeros, x, false).to_string()]),
        )?;
        self.files.push(("counting.csv", csv));
        let periods = ((bound.ln() / lnl).floor() as usize).clamp(1, 2);
        let value = json!({
            "zeros": zeros,
            "distinct": zeros.count(f64::INFINITY, false),
            "with_multiplicity": zeros.count(f64::INFINITY, true),
            "counting_profile": counting_profile(sys, &zeros, periods, 16, false),
        });
        self.zeros = Some(zeros);
        Ok(value)
    }

    fn zeta(&mut self) -> StageResult {
        let sys = &self.prep.system;
        let ser = self.series.as_ref().expect("series stage ran");
        let zeros = self.zeros.as_ref().expect("zeros stage ran");
        let first = sys.rho.floor() + 1.0;
        let grid = [Complex64::new(first, 0.0), Complex64::new(first + 1.0, 0.0)];
        let values = grid
            .iter()
            .map(|&s| zeta(sys, ser, zeros, s, false))
            .collect::<poincare_core::Result<Vec<_>>>()?;
        // The Mellin identity holds on the strip rho < Re s < genus + 1.
        let width = genus(sys) as f64 + 1.0 - sys.rho;
        let strip: Vec<Complex64> = [1.0, 2.0]
            .iter()
            .map(|j| Complex64::new(sys.rho + width * j / 3.0, 0.0))
            .collect();
        let mellin = match &self.fft {
            Some(table) => Some(mellin_identity_check(sys, ser, zeros, table, &strip)?),
            None => {
                self.warnings
                    .push("no Fourier table: Mellin identity check omitted".into());
                None
            }
        };
        let poles = match &self.sample {
            Some(sample) => Some(pole_cancellation(sys, ser, zeros, sample, 0, &POLE_OFFSETS)?),
            None => {
                self.warnings
                    .push("no measure sample: pole cancellation omitted".into());
                None
            }
        };
        Ok(json!({
            "values": values,
            "mellin_identity": mellin,
            "pole_cancellation": poles,
        }))
    }

    fn bridge(&mut self) -> StageResult {
        let c = &self.prep.config;
        let report = counting_measure_bridge(
            &self.prep.system,
            self.series.as_ref().expect("series stage ran"),
            self.zeros.as_ref().expect("zeros stage ran"),
            self.sample.as_ref().expect("measure stage ran"),
            c.x,
            0,
            c.atoms,
            c.seed,
        )?;
        if !report.stable || report.z_score.abs() > 3.0 {
            self.warnings.push(format!(
                "bridge discrepancy: z-score {:.2}, stable under n+1: {}",
                report.z_score, report.stable
            ));
        }
        Ok(serde_json::to_value(report)?)
    }
}
