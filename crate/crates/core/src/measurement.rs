//! Overlap estimation circuits: SWAP test, Hadamard test and the two-ancilla
//! reference-state interferometer, with exact outcome probabilities and
//! shot sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Result};
use crate::linalg::C64;
use crate::methods::DeflationLedger;
use crate::rng::seeded;
use crate::state::{overlap, StateVector};

/// Largest roundoff-negative probability that is clamped to zero.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

fn checked_overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    a.require_normalized()?;
    b.require_normalized()?;
    overlap(a, b)
}

fn clamp_probability(p: f64) -> Result<f64> {
    if p < -PROBABILITY_CLAMP {
        return Err(invalid(format!("negative probability {p}")));
    }
    Ok(p.max(0.0))
}

/// Ancilla-0 probability `(1 + |⟨Φ|G⟩|²)/2`.
pub fn swap_test(phi: &StateVector, g: &StateVector) -> Result<f64> {
    let o = checked_overlap(phi, g)?;
    Ok((1.0 + o.norm_sqr()) / 2.0)
}

/// `Re[e^{iφ}⟨G|Φ⟩]`, the ancilla expectation `P_0 − P_1`.
pub fn hadamard_test(phi: &StateVector, g: &StateVector, varphi: f64) -> Result<f64> {
    let o = checked_overlap(g, phi)?;
    Ok((C64::from_polar(1.0, varphi) * o).re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferometryOutcome {
    /// `probabilities[n1][n2]` for ancilla outcomes `n1, n2`.
    pub probabilities: [[f64; 2]; 2],
    pub phase: f64,
    /// `Σ (−1)^{n1+n2} P_{n1 n2}`.
    pub parity: f64,
}

/// Closed-form outcome distribution of the reference-state interferometer.
/// Ancilla 2 prepares `|G⟩ ± e^{iφ}|R⟩` on one register and ancilla 1 runs a
/// SWAP test against `|Φ⟩` on the other:
/// `P = ⅛[2 + 2s Re(e^{iφ}⟨G|R⟩) + t |⟨G|Φ⟩ + s e^{−iφ}⟨R|Φ⟩|²]`
/// with `s = (−1)^{n2}`, `t = (−1)^{n1}`.
pub fn interferometric_probs(phi: &StateVector, g: &StateVector, r: &StateVector, varphi: f64) -> Result<InterferometryOutcome> {
    r.require_normalized()?;
    let gr = checked_overlap(g, r)?;
    let gphi = checked_overlap(g, phi)?;
    let rphi = overlap(r, phi)?;
    let rot = C64::from_polar(1.0, varphi);
    let mut probabilities = [[0.0; 2]; 2];
    for (n1, row) in probabilities.iter_mut().enumerate() {
        for (n2, p) in row.iter_mut().enumerate() {
            let s = if n2 == 0 { 1.0 } else { -1.0 };
            let t = if n1 == 0 { 1.0 } else { -1.0 };
            let amp = gphi + s * rot.conj() * rphi;
            *p = clamp_probability((2.0 + 2.0 * s * (rot * gr).re + t * amp.norm_sqr()) / 8.0)?;
        }
    }
    let parity = probabilities[0][0] - probabilities[0][1] - probabilities[1][0] + probabilities[1][1];
    Ok(InterferometryOutcome { probabilities, phase: varphi, parity })
}

/// `⟨Φ|R⟩⟨G|Φ⟩` reconstructed from the parities at `φ = 0` and `φ = π/2`.
pub fn reconstruct_reference_product(phi: &StateVector, g: &StateVector, r: &StateVector) -> Result<C64> {
    let re = interferometric_probs(phi, g, r, 0.0)?.parity;
    // Re[i z] = −Im z
    let im = -interferometric_probs(phi, g, r, std::f64::consts::FRAC_PI_2)?.parity;
    Ok(C64::new(re, im))
}

/// Observable whose shot-noise estimate is requested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `|⟨Φ|G⟩|² = 2P_0 − 1` from SWAP-test ancilla-0 probability.
    SwapOverlap(f64),
    /// `P_0 − P_1` from a Hadamard-test expectation value.
    Hadamard(f64),
    /// Interferometer parity.
    Parity([[f64; 2]; 2]),
}

impl Estimator {
    /// Outcome probabilities with the estimator value assigned to each outcome.
    fn outcomes(&self) -> Vec<(f64, f64)> {
        match self {
            Estimator::SwapOverlap(p0) => vec![(*p0, 1.0), (1.0 - p0, -1.0)],
            Estimator::Hadamard(x) => vec![((1.0 + x) / 2.0, 1.0), ((1.0 - x) / 2.0, -1.0)],
            Estimator::Parity(p) => vec![(p[0][0], 1.0), (p[0][1], -1.0), (p[1][0], -1.0), (p[1][1], 1.0)],
        }
    }

    /// Noise-free value of the estimator.
    pub fn exact(&self) -> f64 {
        self.outcomes().iter().map(|(p, x)| p * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledEstimate {
    pub estimate: f64,
    /// Sample standard deviation of the mean.
    pub std_error: f64,
    pub shots: usize,
}

/// Multinomial sampling of `shots` outcomes; deterministic per seed.
pub fn sample_estimate(estimator: &Estimator, shots: usize, seed: u64) -> Result<SampledEstimate> {
    if shots == 0 {
        return Err(invalid("at least one shot is required"));
    }
    let outcomes = estimator.outcomes();
    let total: f64 = outcomes.iter().map(|o| o.0).sum();
    if outcomes.iter().any(|o| !(o.0 >= -PROBABILITY_CLAMP)) || (total - 1.0).abs() > 1e-10 {
        return Err(invalid("outcome probabilities must be non-negative and sum to one"));
    }
    let mut rng = seeded(seed);
    let mut counts = vec![0usize; outcomes.len()];
    for _ in 0..shots {
        let x: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = outcomes.len() - 1;
        for (i, (p, _)) in outcomes.iter().enumerate() {
            acc += p.max(0.0);
            if x < acc {
                pick = i;
                break;
            }
        }
        counts[pick] += 1;
    }
    let n = shots as f64;
    let mean: f64 = counts.iter().zip(&outcomes).map(|(&c, o)| c as f64 * o.1).sum::<f64>() / n;
    let var = if shots > 1 {
        counts.iter().zip(&outcomes).map(|(&c, o)| c as f64 * (o.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SampledEstimate { estimate: mean, std_error: (var / n).sqrt(), shots })
}

/// Improved-deflation objective expressed through reference-scheme
/// quantities: `Re[⟨Φ|R⟩ ⟨u, v|(I − P)|Φ⟩]`, where every term touching `Φ`
/// appears as `⟨Φ|R⟩⟨·|Φ⟩` and the overlaps `⟨u|u_k⟩`, `⟨v|v_l⟩` are classical.
pub fn deflation_cost_with_reference(
    ledger: &DeflationLedger,
    phi: &StateVector,
    r: &StateVector,
    u: &[C64],
    v: &[C64],
    coef: &crate::ComplexMatrix,
) -> Result<f64> {
    if phi.dim() != r.dim() || u.len() * v.len() != phi.dim() {
        return Err(dim("reference, target and candidate dimensions disagree"));
    }
    let baseline = checked_overlap(phi, r)?;
    if baseline.norm() < 1e-10 {
        return Err(invalid(format!("reference overlap {:.3e} is too small", baseline.norm())));
    }
    Ok((baseline * ledger.deflated_overlap(u, v, coef)?).re)
}
