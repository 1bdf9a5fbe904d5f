use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use elliptica::classifier::{classify, DecayProfile, SystemConfig};
use elliptica::iteration::{
    fit_growth_exponent, minimal_monotone_order, oscillation_probe, window_schedule, Functional, GrowthModel,
    IterationState, RadialGrid, WindowParams,
};
use elliptica::lair::{lair_verdict, LairControls};
use elliptica::scan::{run_scan, ScanSpec};
use elliptica::shooting::{initial_data_sweep, shoot, ShootingProblem, StepControls};
use elliptica::{selftest, PowerLog, Radial, RadialTable, VerdictKind};

#[derive(Parser)]
#[command(
    name = "elliptica",
    version,
    about = "Existence regimes of Δu = p v^α, Δv = q u^β on R^N"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the nonexistence and existence conditions and print the verdict as JSON.
    Classify {
        #[command(flatten)]
        exps: Exponents,
        /// Waive α, β ≥ 1 for radially symmetric inputs.
        #[arg(long)]
        symmetric: bool,
    },
    /// Evaluate both Lair integral conditions and print the estimates as JSON.
    Lair {
        #[command(flatten)]
        coef: Coefficients,
        #[arg(long, default_value_t = 8.0)]
        t0: f64,
        #[arg(long, default_value_t = 24)]
        j_max: usize,
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
    },
    /// Run the lower-bound recurrences, write the state CSV and print growth fits.
    Iterate {
        #[command(flatten)]
        coef: Coefficients,
        /// Number of iterations.
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        /// Grid end is e^log_end.
        #[arg(long, default_value_t = 40.0)]
        log_end: f64,
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        /// Window orders; the smallest admissible ones by default.
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 1.5)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value = "iterate.csv")]
        out: PathBuf,
    },
    /// Shoot from the origin; with --sweep, over a grid of center values.
    Shoot {
        #[command(flatten)]
        coef: Coefficients,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long, default_value_t = 1.0)]
        v0: f64,
        #[arg(long, default_value_t = 1e3)]
        horizon: f64,
        #[arg(long, default_value_t = 1e8)]
        cap: f64,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 1e-3)]
        data_min: f64,
        #[arg(long, default_value_t = 1e2)]
        data_max: f64,
        #[arg(long, default_value_t = 5)]
        data_count: usize,
        /// Trajectory CSV, or sweep CSV with --sweep.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter scan from a JSON config and write the region CSV and SVG.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Directory for outputs; defaults to the config's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write every cell, with probe summaries, as JSON.
        #[arg(long)]
        cells: Option<PathBuf>,
    },
    /// Run the bundled property checks.
    Selftest,
}

#[derive(Args)]
struct Exponents {
    #[arg(long, default_value_t = 3)]
    dimension: u32,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    nu: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xi: f64,
}

impl Exponents {
    fn config(&self) -> elliptica::Result<SystemConfig> {
        SystemConfig::new(self.dimension, self.alpha, self.beta)
    }

    fn profile(&self) -> DecayProfile {
        DecayProfile::exponents(self.lambda, self.nu, self.mu, self.xi)
    }
}

type Coef = Arc<dyn Radial>;

/// Coefficients `p`, `q`: power-log envelopes built from the exponents, or
/// `r,value` tables.
#[derive(Args)]
struct Coefficients {
    #[command(flatten)]
    exps: Exponents,
    #[arg(long, default_value_t = 1.0)]
    l_p: f64,
    #[arg(long, default_value_t = 1.0)]
    l_q: f64,
    /// Onset radius of the power-log envelopes (held constant below it).
    #[arg(long, default_value_t = std::f64::consts::E)]
    r_start: f64,
    #[arg(long)]
    p_table: Option<PathBuf>,
    #[arg(long)]
    q_table: Option<PathBuf>,
}

impl Coefficients {
    fn load(&self) -> Result<(SystemConfig, Coef, Coef)> {
        let cfg = self.exps.config()?;
        let e = &self.exps;
        let p = radial(self.p_table.as_deref(), self.l_p, e.lambda, e.nu, self.r_start)?;
        let q = radial(self.q_table.as_deref(), self.l_q, e.mu, e.xi, self.r_start)?;
        Ok((cfg, p, q))
    }
}

fn radial(table: Option<&Path>, constant: f64, power: f64, log_power: f64, r_start: f64) -> Result<Arc<dyn Radial>> {
    Ok(match table {
        Some(path) => {
            let file = File::open(path)
                .map_err(elliptica::Error::Io)
                .with_context(|| format!("opening {}", path.display()))?;
            let t = RadialTable::read_csv(file).with_context(|| format!("reading {}", path.display()))?;
            Arc::new(t)
        }
        None => Arc::new(PowerLog::new(constant, power, log_power, r_start)?),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path)
        .map_err(elliptica::Error::Io)
        .with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // reader went away (e.g. piped into head)
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify { exps, symmetric } => {
            let v = classify(&exps.config()?, &exps.profile(), symmetric)?;
            print_json(&v)?;
        }
        Command::Lair {
            coef,
            t0,
            j_max,
            rel_tol,
        } => {
            let (cfg, p, q) = coef.load()?;
            let controls = LairControls {
                t0,
                j_max,
                rel_tol,
                ..LairControls::default()
            };
            let report = lair_verdict(&cfg, p.as_ref(), q.as_ref(), &controls)?;
            print_json(&report)?;
        }
        Command::Iterate {
            coef,
            k,
            log_end,
            nodes,
            m,
            n,
            a,
            b,
            out,
        } => {
            let (cfg, p, q) = coef.load()?;
            let grid = RadialGrid::log_uniform(RadialGrid::default_start(coef.r_start), log_end.exp(), nodes)?;
            let state = IterationState::new(cfg, grid, p.as_ref(), q.as_ref())?.advance_to(k)?;
            state.write_csv(create(&out)?)?;
            let fits = |values: &[f64]| {
                let samples: Vec<(f64, f64)> = state
                    .grid
                    .nodes()
                    .iter()
                    .copied()
                    .zip(values.iter().copied())
                    .filter(|&(_, v)| v > 0.0)
                    .collect();
                let fit = |model| fit_growth_exponent(&samples, model).ok();
                json!({
                    "power_of_r": fit(GrowthModel::PowerOfR),
                    "power_of_ln_r": fit(GrowthModel::PowerOfLnR),
                })
            };
            let m = match m {
                Some(m) => m,
                None => minimal_monotone_order(&state.p_profile)?.context("no admissible window order m <= 64")?,
            };
            let n = match n {
                Some(n) => n,
                None => minimal_monotone_order(&state.q_profile)?.context("no admissible window order n <= 64")?,
            };
            let w = WindowParams::new(m, n, a, b)?;
            w.check_monotone(&state)?;
            let radii = window_schedule(&state.grid, &w, 2.0, 12)?;
            let y = oscillation_probe(&state, &w, &radii, Functional::Y)?;
            let z = oscillation_probe(&state, &w, &radii, Functional::Z)?;
            print_json(&json!({
                "k": state.k,
                "saturated": state.saturated,
                "csv": out,
                "grid": { "start": state.grid.start(), "end": state.grid.end(), "nodes": state.grid.len() },
                "fits": { "u": fits(&state.u), "v": fits(&state.v) },
                "window": w,
                "oscillation": { "y": y, "z": z },
                "note": "a divergence signature is a fitted trend on a finite grid, not a proof",
            }))?;
        }
        Command::Shoot {
            coef,
            u0,
            v0,
            horizon,
            cap,
            rtol,
            atol,
            sweep,
            data_min,
            data_max,
            data_count,
            out,
        } => {
            let (cfg, p, q) = coef.load()?;
            let controls = StepControls {
                rtol,
                atol,
                ..StepControls::default()
            };
            let prob = ShootingProblem::new(cfg, p, q, u0, v0)
                .with_horizon(horizon)
                .with_cap(cap)
                .with_controls(controls);
            let note = "radial solutions only; reaching the horizon does not prove an entire solution exists";
            if sweep {
                let s = initial_data_sweep(
                    &prob,
                    (data_min, data_max),
                    (data_min, data_max),
                    (data_count, data_count),
                )?;
                let path = out.unwrap_or_else(|| PathBuf::from("sweep.csv"));
                s.write_csv(create(&path)?)?;
                print_json(&json!({
                    "csv": path,
                    "points": s.points.len(),
                    "global_fraction": s.global_fraction,
                    "blowup_fraction": s.blowup_fraction,
                    "min_blowup_radius": s.min_blowup_radius,
                    "failures": s.failures,
                    "note": note,
                }))?;
                if s.failures > 0 {
                    return Ok(ExitCode::from(2));
                }
            } else {
                let res = shoot(&prob)?;
                let path = out.unwrap_or_else(|| PathBuf::from("trajectory.csv"));
                res.write_trajectory_csv(create(&path)?)?;
                print_json(&json!({
                    "csv": path,
                    "outcome": res.outcome,
                    "blowup_radius": res.blowup_radius,
                    "soft": res.soft,
                    "max_values": res.max_values,
                    "last_octave_growth": res.last_octave_growth,
                    "steps": res.steps,
                    "note": note,
                }))?;
            }
        }
        Command::Scan { config, out_dir, cells } => {
            let spec = ScanSpec::from_path(&config).with_context(|| format!("loading {}", config.display()))?;
            let out = run_scan(&spec)?;
            let base = match out_dir {
                Some(d) => d,
                None => config.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("scan");
            let (csv_path, svg_path) = spec.output_paths(&base, stem);
            out.write_files(&csv_path, &svg_path)
                .with_context(|| format!("writing outputs under {}", base.display()))?;
            if let Some(path) = &cells {
                serde_json::to_writer_pretty(create(path)?, &out.cells)?;
            }
            let tension = out
                .cells
                .iter()
                .filter(|c| c.agreement == elliptica::scan::Agreement::Tension)
                .count();
            let failures = out.cells.iter().filter(|c| !c.errors.is_empty()).count();
            print_json(&json!({
                "csv": csv_path,
                "svg": svg_path,
                "cells": out.cells.len(),
                "nonexistence": out.count(VerdictKind::Nonexistence),
                "existence": out.count(VerdictKind::Existence),
                "undetermined": out.count(VerdictKind::Undetermined),
                "tension": tension,
                "probe_failures": failures,
            }))?;
        }
        Command::Selftest => {
            let results = selftest::run_all();
            let mut ok = true;
            for r in &results {
                ok &= r.passed;
                println!(
                    "{} {} ({}, {:.2} s)",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail,
                    r.seconds
                );
            }
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// 1 for bad input, 2 for a numerical probe that failed.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<elliptica::Error>() {
        Some(e) if !e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
