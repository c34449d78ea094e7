//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qsvd_core::hamiltonian::LatticeSpec;
use qsvd_core::methods::Method;
use qsvd_core::sweep::SweepConfig;

/// Sweep cap applied when a config does not set one.
pub const DESK_SWEEP_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Hann,
    Exponential,
}

/// Weight state over all `2^qubits` basis states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightTarget {
    pub kind: WeightKind,
    pub qubits: usize,
    /// Decay of the exponential profile.
    #[serde(default = "default_decay")]
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Target {
    Lattice(LatticeSpec),
    Weights(WeightTarget),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub target: Target,
    /// Spectrum estimator. Absent for a weight target means a circuit fit.
    #[serde(default)]
    pub method: Option<Method>,
    /// Qubits of subsystem A; the rest form B. Defaults to the target's natural cut.
    #[serde(default)]
    pub cut: Option<Vec<usize>>,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_gate_size")]
    pub gate_size: usize,
    /// Deflation steps.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Partial method cutoffs.
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    /// Partial method exponent.
    #[serde(default = "default_power")]
    pub power: f64,
    /// Reference-weight cutoff for the full method.
    #[serde(default)]
    pub weight_cutoff: Option<usize>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sweep")]
    pub sweep: SweepConfig,
    /// Shot budget for sampled overlap estimates.
    #[serde(default)]
    pub shots: Option<usize>,
    /// Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

fn default_layers() -> usize {
    4
}

fn default_gate_size() -> usize {
    2
}

fn default_steps() -> usize {
    20
}

fn default_decay() -> f64 {
    0.9
}

fn default_power() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    1e-12
}

fn default_sweep() -> SweepConfig {
    SweepConfig { max_sweeps: DESK_SWEEP_CAP, ..Default::default() }
}

/// Config problem with an optional 1-based line number in the source file.
#[derive(Debug, thiserror::Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn render(&self) -> String {
        let path = self.path.as_deref().map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
        match self.line {
            Some(line) => format!("{path}:{line}: {}", self.message),
            None => format!("{path}: {}", self.message),
        }
    }

    pub fn new(message: impl Into<String>) -> Self {
        Self { path: None, line: None, message: message.into() }
    }
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// First line assigning `key`, used to anchor semantic errors.
fn line_of_key(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            || t.trim_start_matches('[').trim_end_matches(']').split('.').any(|part| part == key) && t.starts_with('[')
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn from_toml(source: &str, path: Option<&Path>) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(source).map_err(|err| ConfigError {
            path: path.map(Path::to_path_buf),
            line: err.span().map(|s| line_of_offset(source, s.start)),
            message: err.message().to_string(),
        })?;
        config.validate().map_err(|(key, message)| ConfigError {
            path: path.map(Path::to_path_buf),
            line: line_of_key(source, key),
            message: format!("{key}: {message}"),
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|err| ConfigError {
            path: Some(path.to_path_buf()),
            line: None,
            message: err.to_string(),
        })?;
        Self::from_toml(&source, Some(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that do not need the solver. Returns the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let fail = |key, msg: String| Err((key, msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return fail("name", format!("{:?} is not a plain file name", self.name));
        }
        let qubits = match &self.target {
            Target::Lattice(spec) => {
                spec.validate().map_err(|e| ("target", e.to_string()))?;
                spec.num_sites()
            }
            Target::Weights(w) => {
                if w.qubits < 2 || w.qubits > 20 {
                    return fail("qubits", format!("{} qubits outside 2..=20", w.qubits));
                }
                if !(0.0..=1.0).contains(&w.decay) {
                    return fail("decay", format!("{} outside [0, 1]", w.decay));
                }
                w.qubits
            }
        };
        if self.method.is_none() && matches!(self.target, Target::Lattice(_)) {
            return fail("method", "a lattice target needs a method".into());
        }
        if let Some(cut) = &self.cut {
            let mut seen = vec![false; qubits];
            for &q in cut {
                if q >= qubits || std::mem::replace(&mut seen[q], true) {
                    return fail("cut", format!("qubit {q} is out of range or repeated"));
                }
            }
            if cut.is_empty() || cut.len() == qubits {
                return fail("cut", "both subsystems must be non-empty".into());
            }
        }
        if self.layers == 0 {
            return fail("layers", "must be positive".into());
        }
        if self.gate_size == 0 {
            return fail("gate_size", "must be positive".into());
        }
        if self.steps == 0 {
            return fail("steps", "must be positive".into());
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return fail("decay", format!("{} outside (0, 1]", self.decay));
        }
        if !(self.eps > 0.0) {
            return fail("eps", "must be positive".into());
        }
        if !(self.power > 0.0) {
            return fail("power", "must be positive".into());
        }
        if self.weight_cutoff == Some(0) {
            return fail("weight_cutoff", "must be positive".into());
        }
        if let Some(cutoffs) = &self.cutoffs {
            if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[0] >= w[1]) || cutoffs[0] == 0 {
                return fail("cutoffs", "must be positive and strictly increasing".into());
            }
        }
        if self.shots == Some(0) {
            return fail("shots", "must be positive".into());
        }
        self.sweep.validate().map_err(|e| ("sweep", e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Output directory: explicit override, then config, then `QSVD_OUT_DIR`, then `out`.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

pub const OUT_DIR_ENV: &str = "QSVD_OUT_DIR";

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"
name = "chain"
method = "improved"
layers = 2

[target.lattice]
geometry = { variant = "chain", length = 6 }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(CHAIN, None).unwrap();
        assert_eq!(c.steps, 20);
        assert_eq!(c.decay, 0.9);
        assert_eq!(c.eps, 1e-12);
        assert_eq!(c.sweep.max_sweeps, DESK_SWEEP_CAP);
        assert_eq!(c.sweep.rel_tol, 1e-12);
    }

    #[test]
    fn unknown_key_reports_line() {
        let src = format!("{CHAIN}bogus = 1\n");
        let err = ExperimentConfig::from_toml(&src, Some(Path::new("x.toml"))).unwrap_err();
        assert_eq!(err.line, Some(src.lines().count()));
        assert!(err.to_string().starts_with("x.toml:"));
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn semantic_error_is_anchored() {
        let src = CHAIN.replace("layers = 2", "layers = 0");
        let err = ExperimentConfig::from_toml(&src, None).unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.message.starts_with("layers"));
    }

    #[test]
    fn bad_cut_rejected() {
        let src = CHAIN.replace("layers = 2", "cut = [0, 0]");
        assert!(ExperimentConfig::from_toml(&src, None).is_err());
        let src = CHAIN.replace("layers = 2", "cut = [7]");
        assert!(ExperimentConfig::from_toml(&src, None).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::from_toml(CHAIN, None).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn toml_round_trip() {
        let a = ExperimentConfig::from_toml(CHAIN, None).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lattice_needs_method() {
        let src = CHAIN.replace("method = \"improved\"\n", "");
        assert!(ExperimentConfig::from_toml(&src, None).unwrap_err().message.starts_with("method"));
    }
}
