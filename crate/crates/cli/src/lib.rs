//! Command-line front end: scenario files in, CSV tables and a JSON sidecar out.

pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::output::write_all;
use crate::run::{compute, derived, prepare, RunError};
use crate::scenario::{load_table, resolve, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// More than this fraction of failed points makes a run a partial failure.
const FAILURE_FRACTION: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(name = "kerrcat", version, about = "Kerr-cat qubit simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Subcommand, Debug)]
pub enum Action {
    /// Paired even/odd spectrum of the effective Hamiltonian.
    Spectrum(RunArgs),
    /// Exact level-pair degeneracies along Δ/K or ε₂/K.
    Degeneracy(RunArgs),
    /// Floquet quasienergies of the full driven circuit against ε₂/K.
    Floquet(RunArgs),
    /// Adiabatic ramp from vacuum into the cat manifold.
    Ramp(RunArgs),
    /// Bit-flip time T_α from the slowest coherence rate.
    Lifetime(RunArgs),
    /// Leading steady-state populations and leakage.
    Steady(RunArgs),
    /// Wigner function of the steady state.
    Wigner(RunArgs),
    /// Classical energy surface with its extrema.
    Surface(RunArgs),
    /// Validity checks of the perturbative expansion against δφ.
    Validity(RunArgs),
    /// List the built-in presets.
    Presets,
    /// Print a built-in preset as TOML.
    Preset { name: String },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Scenario file (.toml, or a .json sidecar) or a preset written @name.
    pub scenario: String,
    /// Override a scenario key, e.g. --set circuit.M=2.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Action {
    fn command(&self) -> Option<(Command, &RunArgs)> {
        let c = match self {
            Action::Spectrum(a) => (Command::Spectrum, a),
            Action::Degeneracy(a) => (Command::Degeneracy, a),
            Action::Floquet(a) => (Command::Floquet, a),
            Action::Ramp(a) => (Command::Ramp, a),
            Action::Lifetime(a) => (Command::Lifetime, a),
            Action::Steady(a) => (Command::Steady, a),
            Action::Wigner(a) => (Command::Wigner, a),
            Action::Surface(a) => (Command::Surface, a),
            Action::Validity(a) => (Command::Validity, a),
            Action::Presets | Action::Preset { .. } => return None,
        };
        Some(c)
    }
}

pub fn main_with(cli: Cli) -> i32 {
    match &cli.action {
        Action::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            EXIT_OK
        }
        Action::Preset { name } => match presets::get(name) {
            Some(text) => {
                print!("{text}");
                EXIT_OK
            }
            None => {
                eprintln!("unknown preset '{name}'; available: {}", presets::names().join(", "));
                EXIT_CONFIG
            }
        },
        action => {
            let (command, args) = action.command().expect("run action");
            execute(command, args)
        }
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("kerrcat: {msg}");
    code
}

fn run_error(e: RunError) -> i32 {
    match e {
        RunError::Config(_) => fail(EXIT_CONFIG, e),
        RunError::Resource(_) => fail(EXIT_RESOURCE, e),
    }
}

fn execute(command: Command, args: &RunArgs) -> i32 {
    let start = Instant::now();
    let (base, series) = match load_table(&args.scenario).and_then(|t| resolve(t, &args.set)) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let prepared = match series.iter().map(|s| prepare(command, s)).collect::<Result<Vec<_>, _>>() {
        Ok(p) => p,
        Err(e) => return run_error(e),
    };
    if args.jobs == Some(0) {
        return fail(EXIT_CONFIG, "--jobs must be at least 1");
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RESOURCE, format!("cannot start worker threads: {e}")),
    };
    let jobs = pool.current_num_threads();
    let results = match pool.install(|| prepared.iter().map(compute).collect::<Result<Vec<_>, _>>()) {
        Ok(r) => r,
        Err(e) => return run_error(e),
    };

    // The sidecar scenario re-runs as is: command-line overrides are already in
    // the base and are appended to every variant so they keep winning.
    let mut rerun = base.clone();
    rerun.command = Some(command);
    for v in &mut rerun.variants {
        v.set.extend(args.set.iter().cloned());
    }

    let stem = &base.name;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut partial = false;
    for (p, out) in prepared.iter().zip(&results) {
        let mut csvs = Vec::new();
        for (suffix, table) in &out.tables {
            let mut name = stem.clone();
            for part in [&p.label, suffix] {
                if !part.is_empty() {
                    name.push('_');
                    name.push_str(part);
                }
            }
            name.push_str(".csv");
            csvs.push(json!({ "file": name, "header": table.header, "rows": table.rows.len() }));
            files.push((name, table.to_csv()));
        }
        let failed = out.failures.len();
        if failed as f64 > FAILURE_FRACTION * out.points as f64 {
            partial = true;
        }
        for (x, e) in &out.failures {
            eprintln!("kerrcat: {}point {x}: {e}", if p.label.is_empty() { String::new() } else { format!("{}: ", p.label) });
        }
        for w in &out.warnings {
            eprintln!("kerrcat: warning: {w}");
        }
        entries.push(json!({
            "label": p.label,
            "csv": csvs,
            "points": out.points,
            "failures": failed,
            "errors": out.failures.iter().map(|(x, e)| json!({ "x": x, "error": e })).collect::<Vec<_>>(),
            "warnings": out.warnings,
            "resolved": p.scenario,
            "derived": derived(p),
        }));
    }
    let sidecar = json!({
        "tool": "kerrcat",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "scenario": rerun,
        "overrides": args.set,
        "jobs": jobs,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "series": entries,
    });
    files.push((format!("{stem}.json"), serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n"));
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&base.output.dir));
    match write_all(&dir, &files) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(EXIT_IO, format!("cannot write to {}: {e}", dir.display())),
    }
    if partial {
        return fail(EXIT_PARTIAL, "more than 10% of the points failed");
    }
    EXIT_OK
}
