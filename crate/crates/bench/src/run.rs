//! Executes one experiment and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use qsvd_core::analysis::{spectrum_metrics, ErrorRow};
use qsvd_core::ansatz::omega::{fit_weight_state, omega_exponential, omega_hann_weights, rotation_product_state, weight_state};
use qsvd_core::ansatz::reference_weights;
use qsvd_core::hamiltonian::{build_hamiltonian, ground_state_with, GroundState, GroundStateOptions};
use qsvd_core::measurement::{sample_estimate, Estimator};
use qsvd_core::methods::{full_svd, improved_deflation, partial_svd, simple_deflation, Method, MethodConfig, PartialOptions, SpectrumResult};
use qsvd_core::rng::derive_seed;
use qsvd_core::state::schmidt_values;
use qsvd_core::{BipartiteCut, QsvdError, StateVector};

use crate::config::{ExperimentConfig, Target, WeightKind};

/// Largest cutoff used by the partial method when none are configured.
const DEFAULT_PARTIAL_SLOTS: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("solver failure in {stage}: {source}")]
    Solver { stage: &'static str, source: QsvdError },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub dir: PathBuf,
    pub converged: bool,
    pub wall_time: f64,
    /// Relative error of the leading estimate, when a method ran.
    pub s1_rel_err: Option<f64>,
    pub infidelity: Option<f64>,
    pub gap: Option<f64>,
    pub oracle_gap: Option<f64>,
}

#[derive(Serialize)]
struct OracleRow {
    n: usize,
    sigma_n: f64,
    xi_n: Option<f64>,
    config_hash: String,
}

#[derive(Serialize)]
struct HashedErrorRow {
    n: usize,
    s_n: Option<f64>,
    sigma_n: Option<f64>,
    rel_err: Option<f64>,
    xi_n: Option<f64>,
    #[serde(rename = "F_n")]
    f_n: f64,
    config_hash: String,
}

impl HashedErrorRow {
    fn new(r: ErrorRow, config_hash: &str) -> Self {
        Self { n: r.n, s_n: r.s_n, sigma_n: r.sigma_n, rel_err: r.rel_err, xi_n: r.xi_n, f_n: r.f_n, config_hash: config_hash.to_string() }
    }
}

#[derive(Serialize)]
struct SampledRow {
    n: usize,
    exact_re: f64,
    exact_im: f64,
    sampled_re: f64,
    sampled_im: f64,
    std_error: f64,
    shots: usize,
    config_hash: String,
}

#[derive(Serialize)]
struct FitRow {
    sweep: usize,
    objective: f64,
    config_hash: String,
}

#[derive(Serialize)]
struct OracleInfo {
    qubits: usize,
    subsystem_a: Vec<usize>,
    subsystem_b: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_state: Option<GroundState>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    name: &'a str,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    seed: u64,
    run_seeds: Vec<(u64, u64)>,
    git_hash: Option<String>,
    wall_time: f64,
    converged: bool,
    sweeps: Vec<usize>,
    oracle: &'a OracleInfo,
    artifacts: Vec<&'a str>,
}

pub fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn solver<T>(stage: &'static str, r: qsvd_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Solver { stage, source })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let io = |source: std::io::Error| RunError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// Target state, cut and ground-state details for a config.
pub fn prepare(config: &ExperimentConfig) -> qsvd_core::Result<(StateVector, BipartiteCut, Option<GroundState>)> {
    let (state, natural, ground) = match &config.target {
        Target::Lattice(spec) => {
            let h = build_hamiltonian(spec)?;
            let gs = ground_state_with(&h, &GroundStateOptions { tol: 1e-12, ..Default::default() })?;
            (gs.state.clone(), spec.default_cut()?, Some(gs))
        }
        Target::Weights(w) => {
            let state = match w.kind {
                WeightKind::Hann => weight_state(&omega_hann_weights(w.qubits)?)?,
                WeightKind::Exponential => rotation_product_state(&omega_exponential(w.decay, w.qubits)?)?,
            };
            (state, BipartiteCut::contiguous(w.qubits / 2, w.qubits - w.qubits / 2)?, None)
        }
    };
    let cut = match &config.cut {
        Some(a) => {
            let b = (0..state.num_qubits()).filter(|q| !a.contains(q)).collect();
            BipartiteCut::new(a.clone(), b)?
        }
        None => natural,
    };
    Ok((state, cut, ground))
}

/// Writes `oracle.csv` alone and returns the exact Schmidt values.
pub fn execute_oracle(config: &ExperimentConfig, dir: &Path) -> Result<Vec<f64>, RunError> {
    let (state, cut, _) = solver("target preparation", prepare(config))?;
    let sigma = solver("oracle", schmidt_values(&state, &cut))?;
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    write_csv(&dir.join("oracle.csv"), &oracle_rows(&sigma, &config.hash()))?;
    Ok(sigma)
}

fn oracle_rows(sigma: &[f64], hash: &str) -> Vec<OracleRow> {
    sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| OracleRow { n: i + 1, sigma_n: s, xi_n: (s > 0.0).then(|| -2.0 * s.ln()), config_hash: hash.to_string() })
        .collect()
}

pub fn run_method(config: &ExperimentConfig, method: Method, state: &StateVector, cut: &BipartiteCut) -> qsvd_core::Result<SpectrumResult> {
    let mc = MethodConfig { layers: config.layers, gate_size: config.gate_size, seed: config.seed, sweep: config.sweep.clone(), ..Default::default() };
    let slots = 1usize << cut.n_a().min(cut.n_b());
    match method {
        Method::Full => full_svd(state, cut, &reference_weights(config.decay, slots, config.weight_cutoff)?, &mc),
        Method::Partial => {
            let cutoffs = config.cutoffs.clone().unwrap_or_else(|| (1..=slots.min(DEFAULT_PARTIAL_SLOTS)).collect());
            partial_svd(state, cut, &PartialOptions { decay: config.decay, power: config.power, cutoffs }, &mc)
        }
        Method::Simple => Ok(simple_deflation(state, cut, config.steps, &mc)?.0),
        Method::Improved => Ok(improved_deflation(state, cut, config.steps, config.eps, &mc)?.0),
    }
}

fn sampled_rows(result: &SpectrumResult, shots: usize, seed: u64, hash: &str) -> qsvd_core::Result<Vec<SampledRow>> {
    let mut rows = Vec::new();
    for (i, z) in result.metadata.raw_overlaps.iter().enumerate() {
        let re = sample_estimate(&Estimator::Hadamard(z.re.clamp(-1.0, 1.0)), shots, derive_seed(seed, 2 * i as u64))?;
        let im = sample_estimate(&Estimator::Hadamard(z.im.clamp(-1.0, 1.0)), shots, derive_seed(seed, 2 * i as u64 + 1))?;
        rows.push(SampledRow {
            n: i + 1,
            exact_re: z.re,
            exact_im: z.im,
            sampled_re: re.estimate,
            sampled_im: im.estimate,
            std_error: re.std_error.hypot(im.std_error),
            shots,
            config_hash: hash.to_string(),
        });
    }
    Ok(rows)
}

/// Runs `config`, writing artifacts under `dir`. On a solver failure the
/// metadata file records the failure next to any artifacts already written.
pub fn execute(config: &ExperimentConfig, dir: &Path) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let hash = config.hash();
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let (state, cut, ground) = solver("target preparation", prepare(config))?;
    let sigma = solver("oracle", schmidt_values(&state, &cut))?;
    write_csv(&dir.join("oracle.csv"), &oracle_rows(&sigma, &hash))?;
    let oracle = OracleInfo {
        qubits: state.num_qubits(),
        subsystem_a: cut.subsystem_a().to_vec(),
        subsystem_b: cut.subsystem_b().to_vec(),
        ground_state: ground,
    };
    let mut artifacts = vec!["oracle.csv"];
    let mut summary = RunSummary {
        name: config.name.clone(),
        config_hash: hash.clone(),
        dir: dir.to_path_buf(),
        converged: true,
        wall_time: 0.0,
        s1_rel_err: None,
        infidelity: None,
        gap: None,
        oracle_gap: None,
    };
    let mut run_seeds = Vec::new();
    let mut sweeps = Vec::new();
    let outcome: Result<(), RunError> = (|| {
        match config.method {
            Some(method) => {
                let mut result = solver("method", run_method(config, method, &state, &cut))?.with_oracle(&sigma);
                result.metadata.config_hash = Some(hash.clone());
                let report = solver("metrics", spectrum_metrics(&result, &sigma))?;
                write(&dir.join("spectrum.json"), solver("serialization", result.to_json())?.as_bytes())?;
                artifacts.push("spectrum.json");
                let rows: Vec<HashedErrorRow> = report.rows().into_iter().map(|row| HashedErrorRow::new(row, &hash)).collect();
                write_csv(&dir.join("errors.csv"), &rows)?;
                artifacts.push("errors.csv");
                if let Some(shots) = config.shots {
                    write_csv(&dir.join("sampled.csv"), &solver("sampling", sampled_rows(&result, shots, config.seed, &hash))?)?;
                    artifacts.push("sampled.csv");
                }
                summary.converged = result.metadata.all_converged();
                summary.s1_rel_err = report.relative_errors.first().copied().flatten();
                summary.infidelity = report.infidelity.last().copied();
                summary.gap = report.gap;
                summary.oracle_gap = report.oracle_gap;
                run_seeds = result.metadata.runs.iter().map(|r| r.seeds).collect();
                sweeps = result.metadata.runs.iter().map(|r| r.sweeps).collect();
            }
            None => {
                let Target::Weights(w) = &config.target else { unreachable!("validated") };
                let weights = match w.kind {
                    WeightKind::Hann => solver("weights", omega_hann_weights(w.qubits))?,
                    WeightKind::Exponential => state.amplitudes().iter().map(|z| z.re).collect(),
                };
                let fit = solver("fit", fit_weight_state(&weights, config.layers, config.gate_size, config.seed, &config.sweep))?;
                let rows: Vec<FitRow> =
                    fit.trace.sweeps.iter().map(|r| FitRow { sweep: r.sweep, objective: r.objective, config_hash: hash.clone() }).collect();
                write_csv(&dir.join("fit.csv"), &rows)?;
                artifacts.push("fit.csv");
                summary.converged = fit.trace.converged;
                summary.infidelity = Some(fit.infidelity);
                run_seeds = vec![(config.seed, config.seed)];
                sweeps = vec![fit.trace.sweeps_run()];
            }
        }
        Ok(())
    })();
    summary.wall_time = start.elapsed().as_secs_f64();
    let status = match (&outcome, summary.converged) {
        (Err(_), _) => "failed",
        (Ok(()), true) => "converged",
        (Ok(()), false) => "sweep_cap_reached",
    };
    let metadata = Metadata {
        name: &config.name,
        config_hash: &hash,
        config,
        status,
        error: outcome.as_ref().err().map(|e| e.to_string()),
        seed: config.seed,
        run_seeds,
        git_hash: git_hash(),
        wall_time: summary.wall_time,
        converged: summary.converged && outcome.is_ok(),
        sweeps,
        oracle: &oracle,
        artifacts,
    };
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    write(&dir.join("metadata.json"), json.as_bytes())?;
    outcome.map(|()| summary)
}
