//! Command-line front end.
//!
//! ```text
//! cqnls verify   [config.toml] [--out DIR] [--override k=v]...
//! cqnls tune     [config.toml]             [--override k=v]...
//! cqnls simulate [config.toml] [--out DIR] [--override k=v]...
//! cqnls sweep    [config.toml] [--out DIR] [--override k=v]...
//! ```
//!
//! Exit codes: 0 success, 1 failed identities or a failed run, 2 config
//! error (the message names the offending key), 3 sweep with partial
//! failures.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config;
use crate::error::{Error, Result};
use crate::experiments::{self, Classification};
use crate::ground_state;

#[derive(Debug, Parser)]
#[command(name = "cqnls", version, about = "Radial cubic-quintic NLS diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the identity battery and report every check.
    Verify(CommonArgs),
    /// Tune the configured family onto its energy target and report it.
    Tune(CommonArgs),
    /// Run the dichotomy experiment for the configured family.
    Simulate(CommonArgs),
    /// Run every sweep entry and emit one CSV row per run.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    config: Option<PathBuf>,
    /// Directory for artifacts (created if missing); overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value by dotted path, e.g. integrator.dt0=5e-4.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl CommonArgs {
    fn load(&self) -> Result<config::RunConfig> {
        config::load(self.config.as_deref(), &self.overrides)
    }

    fn out_dir(&self, cfg: &config::RunConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output.dir.clone())
    }
}

/// Matplotlib companion script written next to the run artifacts. It
/// locates the CSVs relative to itself, so the directory can be moved.
const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Render overview plots for the run artifacts in this directory."""
import csv
import math
import os

BASE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    path = os.path.join(BASE, name)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    cols = {k: [] for k in reader.fieldnames}
    for row in reader:
        for k, v in row.items():
            cols[k].append(float(v) if v not in ("", None, "true", "false") else math.nan)
    return cols


def main():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run = load("run.csv")
    modulation = load("modulation.csv")
    virial = load("virial.csv")

    fig, axes = plt.subplots(2, 2, figsize=(11, 8))
    ax = axes[0][0]
    ax.plot(run["t"], run["grad_norm_sq"], label="|grad u|^2")
    ax.axhline(run["grad_norm_sq"][0], color="gray", lw=0.6)
    ax.set_xlabel("t")
    ax.set_title("gradient norm")
    ax.legend()

    ax = axes[0][1]
    ax.plot(run["t"], run["delta"], label="delta")
    ax.plot(run["t"], run["g_functional"], label="G")
    ax.set_xlabel("t")
    ax.set_title("threshold distance")
    ax.legend()

    ax = axes[1][0]
    if virial and virial["t"]:
        ax.plot(virial["t"], virial["didt_ir"], label="d/dt I_R")
        ax.plot(virial["t"], virial["bni_margin"], label="margin")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_title("virial monotonicity")

    ax = axes[1][1]
    if modulation and modulation["t"]:
        ax.plot(modulation["t"], modulation["mu"], label="mu")
        ax.set_yscale("log")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_title("modulation scale")

    fig.tight_layout()
    out = os.path.join(BASE, "overview.png")
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
"##;

fn cmd_verify(args: &CommonArgs) -> Result<i32> {
    let cfg = args.load()?;
    let grid = cfg.make_grid()?;
    let reference = ground_state::reference_constants()?;
    let report = experiments::verify_identities(&grid, &reference);
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = args.out_dir(&cfg) {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("verify.txt"), &text)?;
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_tune(args: &CommonArgs) -> Result<i32> {
    let cfg = args.load()?;
    let grid = cfg.make_grid()?;
    let reference = ground_state::reference_constants()?;
    let shape = cfg.experiment_shape()?;
    let side = cfg.experiment_side()?;
    let opts = cfg.experiment_options()?;
    let target = opts.energy_factor * reference.crit_energy;
    match experiments::tune_to_energy(&shape, &grid, target, side, &reference, opts.tol) {
        Ok(family) => {
            let u = experiments::realize(&family, &grid);
            let energy = crate::functionals::energy(&u);
            let ratio =
                (crate::functionals::grad_norm_sq(&u) / reference.grad_norm_sq).sqrt();
            println!("family: {}", family.shape);
            println!("side: {}", side.as_str());
            println!("amplitude: {:.17e}", family.amplitude);
            println!("energy: {energy:.17e} (target {target:.17e})");
            println!("grad_ratio: {ratio:.17e}");
            Ok(0)
        }
        Err(Error::InfeasibleTuning { roots }) => {
            eprintln!("tuning infeasible for {shape} on side {}", side.as_str());
            for (x, ratio) in roots {
                eprintln!("  root a^2 = {x:.12e}, gradient ratio {ratio:.6}");
            }
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_simulate(args: &CommonArgs) -> Result<i32> {
    let cfg = args.load()?;
    let grid = cfg.make_grid()?;
    let reference = ground_state::reference_constants()?;
    let shape = cfg.experiment_shape()?;
    let side = cfg.experiment_side()?;
    let icfg = cfg.integrator_config()?;
    let mut opts = cfg.experiment_options()?;
    opts.out_dir = args.out_dir(&cfg);

    let report =
        experiments::dichotomy_experiment(side, &shape, &grid, &icfg, &reference, &opts)?;
    if let (Some(dir), true) = (&opts.out_dir, cfg.output.emit_plots) {
        fs::write(dir.join("plot.py"), PLOT_SCRIPT)?;
    }
    let o = &report.outcome;
    println!("family: {}", report.family.shape);
    println!("amplitude: {:.17e}", report.family.amplitude);
    println!("classification: {}", o.classification.as_str());
    println!(
        "t_detect: {}",
        o.t_detect.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into())
    );
    println!("achieved_energy: {:.17e}", o.achieved_energy);
    println!("achieved_grad_ratio: {:.12}", o.achieved_grad_ratio);
    println!("refinement_confirmed: {}", o.refinement_confirmed);
    println!("termination: {}", report.log.termination.as_str());
    println!("records: {}", report.log.records.len());
    let undetected =
        o.classification == Classification::Blowup && !o.refinement_confirmed;
    Ok(if undetected { 1 } else { 0 })
}

fn cmd_sweep(args: &CommonArgs) -> Result<i32> {
    let cfg = args.load()?;
    let grid = cfg.make_grid()?;
    let reference = ground_state::reference_constants()?;
    let entries = cfg.sweep_entries()?;
    if entries.is_empty() {
        return Err(Error::Config("sweep: no entries configured".into()));
    }
    let opts = cfg.experiment_options()?;
    let out = experiments::sweep(&entries, &grid, &reference, opts.tol)?;
    match args.out_dir(&cfg) {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("sweep.csv"), &out.csv)?;
        }
        None => print!("{}", out.csv),
    }
    if out.failures.is_empty() {
        Ok(0)
    } else {
        for (i, msg) in &out.failures {
            eprintln!("entry {i} failed: {msg}");
        }
        Err(Error::PartialSweep { failed: out.failures.len(), total: entries.len() })
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::PartialSweep { .. } => 3,
        _ => 1,
    }
}

/// Parses arguments from the process environment, runs the requested
/// command, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
