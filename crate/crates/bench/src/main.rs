//! Benchmark runner for the variational Schmidt-spectrum estimators.
//!
//! Usage:
//!     qsvd-bench run <config.toml> [--out DIR]
//!     qsvd-bench preset <name> [--out DIR] [--seed K] [--workers W]
//!     qsvd-bench oracle <config.toml> [--out DIR]
//!     qsvd-bench validate <config.toml>
//!     qsvd-bench presets
//!
//! Exit codes: 0 ok, 2 config error, 3 solver failure, 4 sweep cap reached.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use qsvd_bench::config::{ExperimentConfig, OUT_DIR_ENV};
use qsvd_bench::presets::{preset, PRESET_NAMES};
use qsvd_bench::run::execute_oracle;
use qsvd_bench::{execute, RunError, RunSummary};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "qsvd-bench", version, about = "Runs Schmidt-spectrum experiments and writes CSV/JSON artifacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config
    Run {
        config: PathBuf,
        /// Output root; overrides the config and the environment
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset batch
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace every run's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Runs executed concurrently
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write only the exact spectrum
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print its hash
    Validate { config: PathBuf },
    /// List preset names
    Presets,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn report(result: &Result<RunSummary, RunError>) -> u8 {
    match result {
        Ok(s) => {
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
            println!(
                "{:<24} {} s1_rel_err={} infidelity={} gap={} oracle_gap={} {:.1}s -> {}",
                s.name,
                if s.converged { "converged" } else { "cap-hit" },
                fmt(s.s1_rel_err),
                fmt(s.infidelity),
                fmt(s.gap),
                fmt(s.oracle_gap),
                s.wall_time,
                s.dir.display()
            );
            if s.converged {
                0
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SOLVER
        }
    }
}

/// Solver failures outrank non-convergence.
fn worst(codes: impl IntoIterator<Item = u8>) -> ExitCode {
    let codes: Vec<u8> = codes.into_iter().collect();
    let code = if codes.contains(&EXIT_SOLVER) {
        EXIT_SOLVER
    } else if codes.contains(&EXIT_NOT_CONVERGED) {
        EXIT_NOT_CONVERGED
    } else {
        0
    };
    ExitCode::from(code)
}

fn write_summary(path: &Path, results: &[Result<RunSummary, RunError>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in results.iter().flatten() {
        w.serialize(s)?;
    }
    w.flush()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = config.resolve_output_dir(out.as_deref()).join(&config.name);
            worst([report(&execute(&config, &dir))])
        }
        Command::Preset { name, out, seed, workers } => {
            let Some(mut runs) = preset(&name) else {
                eprintln!("error: unknown preset {name:?}; known: {}", PRESET_NAMES.join(", "));
                return ExitCode::from(EXIT_CONFIG);
            };
            if let Some(seed) = seed {
                runs.iter_mut().for_each(|r| r.seed = seed);
            }
            let root = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out")).join(&name);
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let results: Vec<_> = pool.install(|| runs.par_iter().map(|r| execute(r, &root.join(&r.name))).collect());
            let codes: Vec<u8> = results.iter().map(report).collect();
            if let Err(e) = write_summary(&root.join("summary.csv"), &results) {
                eprintln!("error: cannot write summary: {e}");
                return ExitCode::from(EXIT_SOLVER);
            }
            worst(codes)
        }
        Command::Oracle { config, out } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = config.resolve_output_dir(out.as_deref()).join(&config.name);
            match execute_oracle(&config, &dir) {
                Ok(sigma) => {
                    for (i, s) in sigma.iter().take(8).enumerate() {
                        println!("sigma_{} = {s:.12}", i + 1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_SOLVER)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{} ok {}", config.display(), c.hash());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Presets => {
            for name in PRESET_NAMES {
                let runs = preset(name).unwrap_or_default();
                println!("{name:<12} {} runs: {}", runs.len(), runs.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(" "));
            }
            ExitCode::SUCCESS
        }
    }
}
