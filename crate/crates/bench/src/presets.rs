//! Named experiment batches. Every preset fixes its seeds and sweep caps.

use std::f64::consts::PI;

use qsvd_core::hamiltonian::LatticeSpec;
use qsvd_core::methods::Method;
use qsvd_core::sweep::SweepConfig;

use crate::config::{ExperimentConfig, Target, WeightKind, WeightTarget, DESK_SWEEP_CAP};

pub const PRESET_NAMES: &[&str] =
    &["fig2", "fig2-small", "fig3", "fig3-small", "fig4", "fig4-small", "fig6", "fig6-small", "fig7", "fig7-small"];

/// Reference-weight cutoffs swept by the full-method presets.
pub const CUTOFF_SWEEP: &[usize] = &[1, 2, 4, 8, 16, 32];

fn base(name: String, target: Target, method: Option<Method>, layers: usize, cap: usize) -> ExperimentConfig {
    ExperimentConfig {
        name,
        target,
        method,
        cut: None,
        layers,
        gate_size: 2,
        steps: 20,
        decay: 0.9,
        cutoffs: None,
        power: 1.0,
        weight_cutoff: None,
        eps: 1e-12,
        seed: 0,
        sweep: SweepConfig { max_sweeps: cap, ..Default::default() },
        shots: None,
        output_dir: None,
    }
}

fn chain(length: usize) -> Target {
    Target::Lattice(LatticeSpec::chain(length, 1.0))
}

fn full_sweep(length: usize, layers: std::ops::RangeInclusive<usize>, cutoff_layers: usize, cutoffs: &[usize], cap: usize) -> Vec<ExperimentConfig> {
    let mut runs: Vec<_> = layers.map(|m| base(format!("full-M{m}"), chain(length), Some(Method::Full), m, cap)).collect();
    for &c in cutoffs {
        let mut r = base(format!("full-M{cutoff_layers}-c{c}"), chain(length), Some(Method::Full), cutoff_layers, cap);
        r.weight_cutoff = Some(c);
        runs.push(r);
    }
    runs
}

fn all_methods(target: Target, layers: usize, steps: usize, cap: usize) -> Vec<ExperimentConfig> {
    [Method::Full, Method::Partial, Method::Simple, Method::Improved]
        .into_iter()
        .map(|m| {
            let mut r = base(m.name().to_string(), target.clone(), Some(m), layers, cap);
            r.steps = steps;
            r
        })
        .collect()
}

fn deflations(target: Target, layers: usize, steps: usize, cap: usize) -> Vec<ExperimentConfig> {
    all_methods(target, layers, steps, cap).into_iter().filter(|r| matches!(r.method, Some(Method::Simple | Method::Improved))).collect()
}

fn hann_fits(sizes: &[usize], cap: usize) -> Vec<ExperimentConfig> {
    let mut runs = Vec::new();
    for &n in sizes {
        for g in 1..=3 {
            let target = Target::Weights(WeightTarget { kind: WeightKind::Hann, qubits: n, decay: 0.9 });
            let mut r = base(format!("hann-N{n}-g{g}"), target, None, 1, cap);
            r.gate_size = g;
            runs.push(r);
        }
    }
    runs
}

fn ladder_runs(rungs: usize, layers: usize, steps: usize, cap: usize) -> Vec<ExperimentConfig> {
    let mut runs = Vec::new();
    for (label, rung) in [("topological", -0.1), ("trivial", 0.1)] {
        let target = Target::Lattice(LatticeSpec::ladder(rungs, 1.0, rung, PI));
        for mut r in all_methods(target, layers, steps, cap) {
            r.name = format!("{label}-{}", r.name);
            runs.push(r);
        }
    }
    runs
}

/// Runs of the named preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<Vec<ExperimentConfig>> {
    let cap = DESK_SWEEP_CAP;
    let runs = match name {
        "fig2" => full_sweep(16, 1..=6, 4, CUTOFF_SWEEP, cap),
        "fig2-small" => full_sweep(10, 1..=3, 3, &[1, 2, 4, 8], 500),
        "fig3" => all_methods(chain(16), 4, 20, cap),
        "fig3-small" => all_methods(chain(10), 3, 10, 2000),
        "fig4" => deflations(Target::Lattice(LatticeSpec::square(4, 4, 1.0)), 4, 20, cap),
        // 3×3 sites, row-major qubits; the cut takes the first four sites.
        "fig4-small" => deflations(Target::Lattice(LatticeSpec::square(3, 3, 1.0)), 2, 8, 2000),
        "fig6" => hann_fits(&[8, 12], cap),
        "fig6-small" => hann_fits(&[6, 8], 2000),
        "fig7" => ladder_runs(8, 4, 20, cap),
        "fig7-small" => ladder_runs(4, 2, 8, 2000),
        _ => return None,
    };
    Some(runs)
}
