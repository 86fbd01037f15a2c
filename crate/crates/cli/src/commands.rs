//! Subcommand bodies: run, write CSVs and the manifest, echo a summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use drivewave_core::io;
use drivewave_core::models::ModelSpec;
use drivewave_core::solver::simulate;
use drivewave_core::stochastic::stochastic_sweep;
use drivewave_core::sweep::{agreement_report, run_sweep};
use drivewave_core::theory::sign_verdict;
use drivewave_core::wave::classify_wave;

use crate::config::Settings;

/// Files written by one command, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(settings: &Settings) -> Result<Self> {
        let dir = PathBuf::from(settings.text("run.out"));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&path)?);
            body(&mut w)?;
            w.flush()
        };
        write().with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn manifest(mut self, subcommand: &str, settings: &Settings, started: Instant) -> Result<()> {
        let files: Vec<toml::Value> = self
            .files
            .iter()
            .cloned()
            .map(toml::Value::String)
            .collect();
        let elapsed = started.elapsed().as_secs_f64();
        let text = format!(
            "subcommand = {}\nversion = {}\nduration_seconds = {elapsed:.16e}\noutputs = {}\n\n[config]\n{}",
            toml::Value::String(subcommand.into()),
            toml::Value::String(env!("CARGO_PKG_VERSION").into()),
            toml::Value::Array(files),
            settings.to_toml()
        );
        self.write("manifest.toml", |w| w.write_all(text.as_bytes()))
    }
}

pub fn run(subcommand: &str, settings: &Settings) -> Result<()> {
    let started = Instant::now();
    let mut outputs = Outputs::new(settings)?;
    match subcommand {
        "simulate" => simulate_cmd(settings, &mut outputs)?,
        "sweep" => sweep_cmd(settings, &mut outputs)?,
        "classify" => classify_cmd(settings, &mut outputs)?,
        "stochastic" => stochastic_cmd(settings, &mut outputs)?,
        other => bail!("unknown subcommand {other}"),
    }
    outputs.manifest(subcommand, settings, started)
}

fn cost_and_rate(model: &ModelSpec<f64>, settings: &Settings) -> (f64, f64) {
    (
        model.cost().unwrap_or_else(|| settings.float("model.s")),
        model
            .demography()
            .map_or_else(|| settings.float("model.r"), |d| d.r),
    )
}

fn simulate_cmd(settings: &Settings, out: &mut Outputs) -> Result<()> {
    let model = settings.model()?;
    let config = settings
        .solver()
        .config_for(model)
        .context("invalid solver configuration")?;
    let tol = settings.tolerances()?;
    let result = simulate(&config).context("simulation failed")?;
    let report = classify_wave(&config.grid, &model, &result.snapshots, &tol);
    let (s, r) = cost_and_rate(&model, settings);

    out.write("snapshots.csv", |w| {
        io::write_snapshots(w, &config.grid, &result.snapshots)
    })?;
    out.write("report.csv", |w| io::write_report(w, s, r, &report))?;
    if let Some(h) = &report.h_table {
        out.write("h_table.csv", |w| io::write_h_table(w, h))?;
    }
    println!("{}", io::report_row(s, r, &report));
    Ok(())
}

fn sweep_cmd(settings: &Settings, out: &mut Outputs) -> Result<()> {
    let config = settings.sweep()?;
    let cells = run_sweep(&config).context("sweep failed")?;
    out.write("sweep.csv", |w| io::write_sweep(w, &cells))?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let converged = cells.iter().filter(|c| c.class.is_converged()).count();
    let agreement = agreement_report(&cells);
    println!(
        "cells {} converged {} failed {} sign_checked {} sign_mismatches {} trivial_checked {} trivial_mismatches {}",
        cells.len(),
        converged,
        failed,
        agreement.sign_checked,
        agreement.sign_mismatches.len(),
        agreement.trivial_checked,
        agreement.trivial_mismatches.len()
    );
    for cell in cells.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "cell ({}, {}) failed: {}",
            io::fmt_float(cell.axis1),
            io::fmt_float(cell.axis2),
            cell.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn classify_cmd(settings: &Settings, out: &mut Outputs) -> Result<()> {
    let (s, r) = (settings.float("model.s"), settings.float("model.r"));
    if !(s > 0.0 && s < 1.0 && r > 0.0 && r.is_finite()) {
        bail!("classify needs 0 < model.s < 1 and model.r > 0, got s = {s}, r = {r}");
    }
    let verdict = sign_verdict(s, r);
    out.write("classify.csv", |w| {
        io::write_verdicts(w, &[(s, r, verdict)])
    })?;
    println!("{},{}", verdict.sign, verdict.clause.label());
    Ok(())
}

fn stochastic_cmd(settings: &Settings, out: &mut Outputs) -> Result<()> {
    let config = settings.stochastic()?;
    let cells = stochastic_sweep(&config).context("stochastic run failed")?;
    out.write("stochastic.csv", |w| io::write_stochastic(w, &cells))?;
    for cell in &cells {
        if cells.len() == 1 {
            println!("{}", cell.outcome.result);
        } else {
            println!(
                "{},{},{}",
                io::fmt_float(cell.s),
                io::fmt_float(cell.r),
                cell.outcome.result
            );
        }
    }
    Ok(())
}
