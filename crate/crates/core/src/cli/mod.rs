//! Command-line scenario runner.
//!
//! ```text
//! cellcoop run <config> [--out DIR] [--rel-tol X] [--abs-tol X]
//! cellcoop sweep <config-glob> --jobs N [--out DIR]
//! ```
//!
//! Exit status: 0 on success, 1 when a model or solver reports an error,
//! 2 for usage errors.

pub mod output;
pub mod run;
pub mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::birth::BirthError;
use crate::continuous::ContinuousError;
use crate::integrator::IntegrateError;
use crate::model::ParamError;
use crate::ns::NsError;

pub use output::{read_trajectory, write_trajectory};
pub use run::{run_scenario, RunReport};
pub use scenario::{parse_scenario, parse_scenario_str, Command, ModelKind, Scenario, Setup};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Scenario(String),
    #[error("{path}: {message}")]
    Table { path: String, message: String },
    #[error("model `{model}` does not support command `{command}`")]
    Unsupported { model: ModelKind, command: Command },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Birth(#[from] BirthError),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
    #[error(transparent)]
    Ns(#[from] NsError),
}

#[derive(Debug, Parser)]
#[command(name = "cellcoop", version, about = "Run cellulose-degradation population scenarios")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run one scenario file.
    Run {
        config: PathBuf,
        /// Output directory (default: the scenario's `output.dir`, else `out/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Run every scenario matching a glob, in parallel.
    Sweep {
        pattern: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Parent directory; each scenario writes to `<out>/<file stem>`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

const USAGE: u8 = 2;
const DOMAIN: u8 = 1;

fn default_out(s: &Scenario) -> PathBuf {
    s.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&s.name))
}

fn print_report(r: &RunReport) {
    println!("{}: wrote {}", r.name, r.out_dir.display());
    for line in &r.summary {
        println!("  {line}");
    }
}

fn run_one(config: PathBuf, out: Option<PathBuf>, rel: Option<f64>, abs: Option<f64>) -> u8 {
    let mut scenario = match parse_scenario(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return DOMAIN;
        }
    };
    let step = &mut scenario.control.step;
    step.rel_tol = rel.unwrap_or(step.rel_tol);
    step.abs_tol = abs.unwrap_or(step.abs_tol);
    if let Err(e) = step.validate() {
        eprintln!("error: {e}");
        return USAGE;
    }
    let dir = out.unwrap_or_else(|| default_out(&scenario));
    match run_scenario(&scenario, &dir) {
        Ok(r) => {
            print_report(&r);
            0
        }
        Err(e) => {
            eprintln!("error: {}: {e}", scenario.name);
            DOMAIN
        }
    }
}

fn sweep(pattern: &str, jobs: usize, out: PathBuf) -> u8 {
    let paths = match glob::glob(pattern) {
        Ok(p) => p.filter_map(Result::ok).collect::<Vec<_>>(),
        Err(e) => {
            eprintln!("error: bad pattern `{pattern}`: {e}");
            return USAGE;
        }
    };
    if paths.is_empty() {
        eprintln!("error: no files match `{pattern}`");
        return USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return USAGE;
        }
    };
    let results: Vec<(PathBuf, Result<RunReport, CliError>)> = pool.install(|| {
        paths
            .par_iter()
            .map(|path| {
                let stem = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_os_string());
                let r = parse_scenario(path).and_then(|s| run_scenario(&s, &out.join(&stem)));
                (path.clone(), r)
            })
            .collect()
    });
    let mut status = 0;
    for (path, r) in results {
        match r {
            Ok(r) => print_report(&r),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                status = DOMAIN;
            }
        }
    }
    status
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let code = match cli.cmd {
        Cmd::Run { config, out, rel_tol, abs_tol } => run_one(config, out, rel_tol, abs_tol),
        Cmd::Sweep { pattern, jobs, out } => sweep(&pattern, jobs, out),
    };
    ExitCode::from(code)
}
