//! Variational estimators of the Schmidt spectrum across a cut.

mod deflation;
mod full;
mod partial;

pub use deflation::{core_matrix, improved_deflation, simple_deflation, DeflationLedger, EARLY_STOP_NORM};
pub use full::{diagonal_overlaps, full_svd};
pub use partial::{partial_svd, telescoping_recovery, PartialOptions};

use serde::{Deserialize, Serialize};

use crate::ansatz::{GateInit, LayeredCircuit};
use crate::error::{invalid, Result};
use crate::rng::derive_seed;
use crate::sweep::{sweep_optimize, BipartiteObjective, SweepConfig, SweepTrace};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Full,
    Partial,
    Simple,
    Improved,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Partial => "partial",
            Method::Simple => "simple",
            Method::Improved => "improved",
        }
    }
}

/// Circuit shape and optimizer settings shared by all methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub layers: usize,
    pub gate_size: usize,
    pub init: GateInit,
    pub seed: u64,
    pub sweep: SweepConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self { layers: 1, gate_size: 2, init: GateInit::Haar, seed: 0, sweep: SweepConfig::default() }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.gate_size == 0 {
            return Err(invalid("layers and gate size must be positive"));
        }
        self.sweep.validate()
    }

    /// Seeds of the `(U, V)` pair for optimization run `run`.
    pub fn run_seeds(&self, run: u64) -> (u64, u64) {
        (derive_seed(self.seed, 2 * run), derive_seed(self.seed, 2 * run + 1))
    }

    fn circuits(&self, n_a: usize, n_b: usize, run: u64) -> Result<(LayeredCircuit, LayeredCircuit)> {
        let (su, sv) = self.run_seeds(run);
        Ok((
            LayeredCircuit::new(n_a, self.layers, self.gate_size, self.init, su)?,
            LayeredCircuit::new(n_b, self.layers, self.gate_size, self.init, sv)?,
        ))
    }
}

/// One sweep optimization inside a method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub seeds: (u64, u64),
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

pub(crate) struct OptimizedPair {
    pub u: LayeredCircuit,
    pub v: LayeredCircuit,
    pub info: RunInfo,
}

pub(crate) fn optimize_pair(objective: &BipartiteObjective, n_a: usize, n_b: usize, config: &MethodConfig, run: u64) -> Result<OptimizedPair> {
    let (mut u, mut v) = config.circuits(n_a, n_b, run)?;
    let trace: SweepTrace = sweep_optimize(&mut u, &mut v, objective, &config.sweep)?;
    let info = RunInfo {
        seeds: config.run_seeds(run),
        objective: trace.final_objective(),
        sweeps: trace.sweeps_run(),
        converged: trace.converged,
        trace: trace.sweeps.iter().map(|r| r.objective).collect(),
    };
    Ok(OptimizedPair { u, v, info })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub layers: usize,
    pub gate_size: usize,
    pub seed: u64,
    /// Deflation steps actually taken.
    pub steps: Option<usize>,
    pub cutoffs: Vec<usize>,
    pub runs: Vec<RunInfo>,
    /// `⟨u_n, v_n|Φ⟩` per deflation step, before any clipping.
    pub raw_overlaps: Vec<C64>,
    /// Spectrum estimate after each deflation step.
    pub history: Vec<Vec<f64>>,
    pub config_hash: Option<String>,
    pub notes: Vec<String>,
}

impl SpectrumMetadata {
    fn from_config(config: &MethodConfig) -> Self {
        Self { layers: config.layers, gate_size: config.gate_size, seed: config.seed, ..Default::default() }
    }

    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.converged)
    }
}

/// Estimated spectrum with derived quantities. `None` marks undefined slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub method: Method,
    pub values: Vec<Option<f64>>,
    /// `−2 ln s_n`, undefined where `s_n` is undefined or zero.
    pub entanglement: Vec<Option<f64>>,
    /// `Σ_{m≤n} s_m²`, undefined slots contributing zero.
    pub cumulative_fidelity: Vec<f64>,
    pub oracle: Option<Vec<f64>>,
    pub relative_errors: Option<Vec<Option<f64>>>,
    pub metadata: SpectrumMetadata,
}

impl SpectrumResult {
    pub fn new(method: Method, values: Vec<Option<f64>>, metadata: SpectrumMetadata) -> Self {
        let entanglement = values.iter().map(|s| s.filter(|&x| x > 0.0).map(|x| -2.0 * x.ln())).collect();
        let mut acc = 0.0;
        let cumulative_fidelity = values
            .iter()
            .map(|s| {
                acc += s.map_or(0.0, |x| x * x);
                acc
            })
            .collect();
        Self { method, values, entanglement, cumulative_fidelity, oracle: None, relative_errors: None, metadata }
    }

    /// Attaches exact values and per-slot `|1 − s_n/σ_n|`.
    pub fn with_oracle(mut self, sigma: &[f64]) -> Self {
        let errors = self
            .values
            .iter()
            .enumerate()
            .map(|(n, s)| match (s, sigma.get(n)) {
                (Some(s), Some(&sig)) if sig > 0.0 => Some((1.0 - s / sig).abs()),
                _ => None,
            })
            .collect();
        self.oracle = Some(sigma.to_vec());
        self.relative_errors = Some(errors);
        self
    }

    pub fn value(&self, n: usize) -> Option<f64> {
        self.values.get(n).copied().flatten()
    }

    pub fn relative_error(&self, n: usize) -> Option<f64> {
        self.relative_errors.as_ref()?.get(n).copied().flatten()
    }

    /// `ξ_2 − ξ_1`.
    pub fn schmidt_gap(&self) -> Option<f64> {
        Some(self.entanglement.get(1).copied()?? - self.entanglement.first().copied()??)
    }

    /// `1 − F` at the last slot.
    pub fn infidelity(&self) -> f64 {
        1.0 - self.cumulative_fidelity.last().copied().unwrap_or(0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn sort_descending(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}
