use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use poincare_core::exact::{format_rational, parse_rational};
use poincare_core::poly_core::{auto_fixed_point, normalize, RealPolynomial};
use poincare_core::NormalizedSystem;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Series,
    Eval,
    Measure,
    Fourier,
    Zeros,
    Zeta,
    Bridge,
    All,
}

/// Poincaré functions of real polynomials: normalization, series, harmonic
/// measure, periodic asymptotics, zeros and zeta functions.
#[derive(Debug, Parser)]
#[command(name = "poincare-lab", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Coefficients from the leading term down to the linear term, as exact
    /// rationals: "4,-3" is 4z^2 - 3z.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    /// Constant term of the polynomial.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub constant: String,
    /// Repelling fixed point to normalize at, or "auto".
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub fixed_point: String,
    /// Taylor order of the Poincaré series.
    #[arg(long, default_value_t = 64)]
    pub order: usize,
    /// Number of measure atoms (also the walk count of the bridge).
    #[arg(long, default_value_t = 100_000)]
    pub atoms: usize,
    /// Backward-iteration depth of the measure sample.
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Functional-equation residual above which an evaluation is flagged.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Search bound X for the real zeros.
    #[arg(long, default_value_t = 1e5)]
    pub bound: f64,
    /// Radius x of the counting-measure bridge.
    #[arg(long, default_value_t = 1e3)]
    pub x: f64,
    /// Evaluation point "re" or "re,im"; repeatable. Defaults to a fixed grid.
    #[arg(long = "at", allow_hyphen_values = true)]
    pub at: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Echo of the validated configuration. The output directory is left out so
/// that reports written to different places stay byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub poly: Vec<String>,
    pub constant: String,
    pub fixed_point: String,
    pub order: usize,
    pub atoms: usize,
    pub depth: usize,
    pub seed: u64,
    pub tol: f64,
    pub bound: f64,
    pub x: f64,
    pub at: Vec<Complex64>,
}

/// A configuration that parsed and normalized cleanly.
pub struct Prepared {
    pub config: RunConfig,
    pub input: RealPolynomial,
    pub system: NormalizedSystem,
    pub out: PathBuf,
}

fn parse_point(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.parse().with_context(|| format!("bad number `{s}` in --at"))?;
        if !v.is_finite() {
            bail!("--at coordinates must be finite, got `{s}`");
        }
        Ok(v)
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => bail!("--at expects \"re\" or \"re,im\", got `{text}`"),
    }
}

impl Prepared {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let mut coeffs = vec![parse_rational(&cli.constant)?];
        let descending = cli
            .poly
            .split(',')
            .map(parse_rational)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if descending.is_empty() {
            bail!("--poly needs at least one coefficient");
        }
        coeffs.extend(descending.into_iter().rev());
        let input = RealPolynomial::new(coeffs)?;
        if input.degree() < 2 {
            bail!("polynomial degree must be at least 2");
        }
        if cli.order < 2 {
            bail!("--order must be at least 2");
        }
        if cli.atoms == 0 || cli.depth == 0 {
            bail!("--atoms and --depth must be positive");
        }
        for (name, v) in [("--tol", cli.tol), ("--bound", cli.bound), ("--x", cli.x)] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{name} must be a positive finite number");
            }
        }
        if cli.x > cli.bound {
            bail!("--x must not exceed --bound");
        }
        let at = cli
            .at
            .iter()
            .map(|s| parse_point(s))
            .collect::<Result<Vec<_>>>()?;
        let point = match cli.fixed_point.trim() {
            "auto" => auto_fixed_point(&input)?,
            v => Complex64::new(poincare_core::exact::to_f64(&parse_rational(v)?), 0.0),
        };
        let system = normalize(&input, point)?;
        let config = RunConfig {
            command: cli.command,
            poly: input.coeffs()[1..].iter().rev().map(format_rational).collect(),
            constant: format_rational(&input.coeffs()[0]),
            fixed_point: cli.fixed_point.trim().to_string(),
            order: cli.order,
            atoms: cli.atoms,
            depth: cli.depth,
            seed: cli.seed,
            tol: cli.tol,
            bound: cli.bound,
            x: cli.x,
            at,
        };
        Ok(Self {
            config,
            input,
            system,
            out: cli.out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("poincare-lab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn coefficients_are_descending_without_constant() {
        let p = Prepared::from_cli(cli(&["analyze", "--poly", "4,-3"])).unwrap();
        assert_eq!(p.input.coeffs_f64(), &[0.0, -3.0, 4.0]);
        assert_eq!(p.config.poly, ["4", "-3"]);
        assert_eq!(p.system.lambda, 5.0);
    }

    #[test]
    fn constant_term_and_explicit_fixed_point() {
        // z^2 - 2 has the repelling fixed point 2 with multiplier 4.
        let p = Prepared::from_cli(cli(&[
            "analyze",
            "--poly",
            "1,0",
            "--constant",
            "-2",
            "--fixed-point",
            "2",
        ]))
        .unwrap();
        assert_eq!(p.system.lambda, 4.0);
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_point("-1, 2").unwrap(), Complex64::new(-1.0, 2.0));
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("inf").is_err());
    }

    #[test]
    fn x_beyond_bound_is_rejected() {
        assert!(Prepared::from_cli(cli(&["bridge", "--poly", "1,4", "--x", "10", "--bound", "5"])).is_err());
    }
}
