//! Error metrics against exact spectra, majorization and bound checks, and
//! the noise-propagation study of the telescoping recovery.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::ReferenceWeights;
use crate::error::{invalid, Result};
use crate::methods::{telescoping_recovery, SpectrumResult};
use crate::rng::seeded;

pub const MAJORIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    /// 1-based index.
    pub n: usize,
    pub s_n: Option<f64>,
    pub sigma_n: Option<f64>,
    pub rel_err: Option<f64>,
    pub xi_n: Option<f64>,
    #[serde(rename = "F_n")]
    pub f_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub estimates: Vec<Option<f64>>,
    pub oracle: Vec<f64>,
    /// `|1 − s_n/σ_n|`.
    pub relative_errors: Vec<Option<f64>>,
    /// `1 − F_n` with `F_n = Σ_{m≤n} s_m²`.
    pub infidelity: Vec<f64>,
    /// `−2 ln s_n` for `s_n > 0`.
    pub entanglement: Vec<Option<f64>>,
    pub gap: Option<f64>,
    pub oracle_gap: Option<f64>,
    /// `|Δ_est − Δ_oracle|`.
    pub gap_error: Option<f64>,
    /// 0-based slots without a usable estimate.
    pub undefined: Vec<usize>,
}

fn xi(s: f64) -> Option<f64> {
    (s > 0.0).then(|| -2.0 * s.ln())
}

impl ErrorReport {
    /// Mean relative error over defined slots among the first `count`.
    pub fn mean_relative_error(&self, count: usize) -> Option<f64> {
        let defined: Vec<f64> = self.relative_errors.iter().take(count).flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    pub fn rows(&self) -> Vec<ErrorRow> {
        (0..self.estimates.len())
            .map(|i| ErrorRow {
                n: i + 1,
                s_n: self.estimates[i],
                sigma_n: self.oracle.get(i).copied(),
                rel_err: self.relative_errors[i],
                xi_n: self.entanglement[i],
                f_n: 1.0 - self.infidelity[i],
            })
            .collect()
    }
}

pub fn spectrum_metrics(estimate: &SpectrumResult, oracle: &[f64]) -> Result<ErrorReport> {
    if oracle.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("oracle values must be non-increasing"));
    }
    let estimates = estimate.values.clone();
    let relative_errors = estimates
        .iter()
        .enumerate()
        .map(|(i, s)| match (s, oracle.get(i)) {
            (Some(s), Some(&sig)) if sig > 0.0 => Some((1.0 - s / sig).abs()),
            _ => None,
        })
        .collect();
    let mut captured = 0.0;
    let infidelity = estimates
        .iter()
        .map(|s| {
            captured += s.map_or(0.0, |x| x * x);
            1.0 - captured
        })
        .collect();
    let entanglement: Vec<Option<f64>> = estimates.iter().map(|s| s.and_then(xi)).collect();
    let gap = match (entanglement.first(), entanglement.get(1)) {
        (Some(Some(a)), Some(Some(b))) => Some(b - a),
        _ => None,
    };
    let oracle_gap = match oracle {
        [a, b, ..] => xi(*a).zip(xi(*b)).map(|(a, b)| b - a),
        _ => None,
    };
    let gap_error = gap.zip(oracle_gap).map(|(g, o)| (g - o).abs());
    let undefined = estimates.iter().enumerate().filter(|(_, s)| !matches!(s, Some(x) if *x > 0.0)).map(|(i, _)| i).collect();
    Ok(ErrorReport { estimates, oracle: oracle.to_vec(), relative_errors, infidelity, entanglement, gap, oracle_gap, gap_error, undefined })
}

/// `x ≺ y`: every prefix sum of sorted `x` is at most that of sorted `y`,
/// with equal totals.
pub fn majorization_check(x: &[f64], y: &[f64]) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (x, y) = (sorted(x), sorted(y));
    let (mut sx, mut sy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sx += a;
        sy += b;
        if sx > sy + MAJORIZATION_TOL {
            return false;
        }
    }
    (sx - sy).abs() <= MAJORIZATION_TOL
}

/// `Σ w_n σ_n − I`; non-negative for every achievable objective value.
pub fn bound_check(objective: f64, weights: &ReferenceWeights, oracle: &[f64]) -> f64 {
    weights.weights.iter().zip(oracle).map(|(w, s)| w * s).sum::<f64>() - objective
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationRow {
    pub power: f64,
    /// Mean `|1 − s_n/σ_n|` over trials where `s_n` was recovered.
    pub mean_relative_error: Vec<Option<f64>>,
    /// Trials in which `s_n` could not be recovered.
    pub undefined: Vec<usize>,
    /// Slots where the recovery amplifies noise without bound.
    pub divergent: Vec<bool>,
}

impl PropagationRow {
    pub fn any_divergent(&self) -> bool {
        self.divergent.iter().any(|&d| d)
    }
}

/// Simulates independent noisy truncated estimates `s^{(n)}_k = σ_k + δ`,
/// `δ ~ U(−noise, noise)`, for every cutoff `n`, and recovers the spectrum by
/// differencing cumulative sums of `s^p`. Every power sees the same draws.
pub fn error_propagation_study(oracle: &[f64], noise: f64, powers: &[f64], trials: usize, seed: u64) -> Result<Vec<PropagationRow>> {
    if let Some(p) = powers.iter().find(|&&p| !(p > 0.0)) {
        return Err(invalid(format!("powers must be positive, got {p}")));
    }
    if !(noise >= 0.0) || trials == 0 || oracle.is_empty() {
        return Err(invalid("need non-negative noise, at least one trial and a non-empty spectrum"));
    }
    let len = oracle.len();
    let cutoffs: Vec<usize> = (1..=len).collect();
    let mut rng = seeded(seed);
    let mut totals = vec![vec![0.0; len]; powers.len()];
    let mut counts = vec![vec![0usize; len]; powers.len()];
    let mut nonfinite = vec![vec![false; len]; powers.len()];
    for _ in 0..trials {
        let estimates: Vec<Vec<f64>> = (1..=len)
            .map(|c| oracle[..c].iter().map(|s| s + noise * (2.0 * rng.random::<f64>() - 1.0)).collect())
            .collect();
        for (j, &p) in powers.iter().enumerate() {
            let sums: Vec<f64> = estimates.iter().map(|e| e.iter().map(|s| s.max(0.0).powf(p)).sum()).collect();
            for (n, s) in telescoping_recovery(&cutoffs, &sums, p).into_iter().enumerate() {
                if let (Some(s), true) = (s, oracle[n] > 0.0) {
                    let e = (1.0 - s / oracle[n]).abs();
                    if e.is_finite() {
                        totals[j][n] += e;
                        counts[j][n] += 1;
                    } else {
                        nonfinite[j][n] = true;
                    }
                }
            }
        }
    }
    Ok(powers
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let mean: Vec<Option<f64>> = (0..len).map(|n| (counts[j][n] > 0).then(|| totals[j][n] / counts[j][n] as f64)).collect();
            let divergent = (0..len)
                .map(|n| {
                    let sub_linear_tail = p < 1.0 && oracle[n] <= noise;
                    sub_linear_tail || nonfinite[j][n] || mean[n].is_some_and(|m| m > 1.0)
                })
                .collect();
            PropagationRow { power: p, mean_relative_error: mean, undefined: counts[j].iter().map(|c| trials - c).collect(), divergent }
        })
        .collect())
}

/// `σ_n ∝ ratio^n`, normalized to unit 2-norm.
pub fn geometric_spectrum(ratio: f64, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|n| ratio.powi(n as i32)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}
