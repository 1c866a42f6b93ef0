mod config;
mod pipeline;

use anyhow::{Context, Result};
use clap::Parser;
use config::{Cli, Prepared, RunConfig};
use pipeline::{RunOutput, StageRecord};
use poincare_core::{NormalizedSystem, RealPolynomial};
use serde::Serialize;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

/// Bumped whenever the report layout changes; see `schema/report.schema.json`.
const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
    core_version: &'static str,
}

#[derive(Serialize)]
struct System<'a> {
    input: &'a RealPolynomial,
    normalized: &'a NormalizedSystem,
    lambda_exact: String,
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: &'static str,
    tool: Tool,
    config: &'a RunConfig,
    system: System<'a>,
    stages: &'a [StageRecord],
    warnings: &'a [String],
    outputs: Vec<&'static str>,
}

fn write_outputs(prep: &Prepared, run: &RunOutput) -> Result<()> {
    let mut outputs = vec!["report.json"];
    outputs.extend(run.files.iter().map(|(name, _)| *name));
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: poincare_core::VERSION,
        },
        config: &prep.config,
        system: System {
            input: &prep.input,
            normalized: &prep.system,
            lambda_exact: poincare_core::exact::format_rational(prep.system.lambda_exact()),
        },
        stages: &run.stages,
        warnings: &run.warnings,
        outputs,
    };
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    fs::create_dir_all(&prep.out).with_context(|| format!("creating {}", prep.out.display()))?;
    fs::write(prep.out.join("report.json"), json)?;
    for (name, bytes) in &run.files {
        fs::write(prep.out.join(name), bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prep = match Prepared::from_cli(cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let started = Instant::now();
    let run = pipeline::run(&prep);
    for rec in &run.stages {
        eprintln!(
            "{:<10} {:<8} {:>8.2}s{}",
            rec.stage.name(),
            format!("{:?}", rec.status).to_lowercase(),
            rec.elapsed.as_secs_f64(),
            rec.reason
                .as_deref()
                .map(|r| format!("  {r}"))
                .unwrap_or_default()
        );
    }
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = write_outputs(&prep, &run) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    eprintln!(
        "wall-clock {:.2}s, outputs in {}",
        started.elapsed().as_secs_f64(),
        prep.out.display()
    );
    if run.failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
