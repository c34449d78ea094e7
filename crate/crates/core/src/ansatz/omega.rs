//! Weight-state preparations: exponential product rotations, the rank-two
//! core of a truncated exponential, and the Hann window.

use crate::ansatz::{GateInit, LayeredCircuit};
use crate::error::{invalid, Result};
use crate::linalg::{singular_values, ComplexMatrix, C64, ZERO};
use crate::state::{StateVector, MAX_QUBITS};
use crate::sweep::{fit_circuit, SweepConfig, SweepTrace};
use nalgebra::DMatrix;

/// Rotation angles `θ_i = 2·atan(p^{2^{i−1}})`, one per qubit (qubit `i−1`).
pub fn omega_exponential(p: f64, k: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(invalid(format!("exponential decay must lie in [0, 1), got {p}")));
    }
    Ok((0..k).map(|i| 2.0 * p.powf((1u64 << i) as f64).atan()).collect())
}

/// `⊗_i R_y(θ_i)|0⟩` with `R_y(θ)|0⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
pub fn rotation_product_state(angles: &[f64]) -> Result<StateVector> {
    let k = angles.len();
    if k == 0 || k > MAX_QUBITS {
        return Err(invalid(format!("rotation product on {k} qubits")));
    }
    let amps = (0..1usize << k)
        .map(|n| {
            let a: f64 = angles
                .iter()
                .enumerate()
                .map(|(i, t)| if (n >> i) & 1 == 1 { (t / 2.0).sin() } else { (t / 2.0).cos() })
                .product();
            C64::new(a, 0.0)
        })
        .collect();
    StateVector::new(k, amps)
}

/// Normalized state with amplitudes `weights[n]` on basis index `n`.
pub fn weight_state(weights: &[f64]) -> Result<StateVector> {
    if !weights.len().is_power_of_two() {
        return Err(invalid(format!("{} weights is not a power of two", weights.len())));
    }
    let n = weights.len().trailing_zeros() as usize;
    StateVector::new(n, weights.iter().map(|&w| C64::new(w, 0.0)).collect())?.normalize()
}

/// Amplitudes `∝ p^n` for `n < c` on `total` qubits, zero beyond.
pub fn truncated_exponential_weights(p: f64, c: usize, total: usize) -> Result<Vec<f64>> {
    if total > MAX_QUBITS || c == 0 || c > 1 << total {
        return Err(invalid(format!("cutoff {c} on {total} qubits")));
    }
    let mut w: Vec<f64> = (0..1usize << total).map(|n| if n < c { p.powi(n as i32) } else { 0.0 }).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    Ok(w)
}

/// 2×2 core of the truncated exponential weight state across a cut after the
/// lowest `n_a` qubits. With `c = 2^{n_a}·b + a`, rows are the A-side blocks
/// `n < a` and `a ≤ n < 2^{n_a}`; columns are the B-side blocks `m = b` and
/// `m < b`. Its singular values are the Schmidt values of the cut.
pub fn omega_cutoff_core(p: f64, c: usize, n_a: usize, total: usize) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("decay must lie in [0, 1], got {p}")));
    }
    if total > MAX_QUBITS || n_a == 0 || n_a >= total {
        return Err(invalid(format!("cut after {n_a} of {total} qubits")));
    }
    if c == 0 || c >= 1 << total {
        return Err(invalid(format!("cutoff {c} must lie in 1..2^{total}")));
    }
    let block = 1usize << n_a;
    let (b, a) = (c / block, c % block);
    let p2 = p * p;
    let geometric = |from: usize, to: usize, stride: usize| -> f64 {
        (from..to).map(|n| p2.powf((n * stride) as f64)).sum()
    };
    let na1 = geometric(0, a, 1);
    let na2 = geometric(a, block, 1);
    let nb1 = p2.powf((block * b) as f64);
    let nb2 = geometric(0, b, block);
    let total_norm = geometric(0, c, 1);
    let entry = |x: f64| C64::new((x / total_norm).sqrt(), 0.0);
    ComplexMatrix::from_row_major(2, 2, vec![entry(na1 * nb1), entry(na1 * nb2), ZERO, entry(na2 * nb2)])
}

/// Hann window `w_n ∝ ½[1 + cos(πn/2^N)]` on `N` qubits, normalized.
pub fn omega_hann_weights(num_qubits: usize) -> Result<Vec<f64>> {
    if num_qubits < 2 || num_qubits > MAX_QUBITS {
        return Err(invalid(format!("Hann window on {num_qubits} qubits")));
    }
    let size = 1usize << num_qubits;
    let alpha = std::f64::consts::PI / size as f64;
    let mut w: Vec<f64> = (0..size).map(|n| 0.5 * (1.0 + (alpha * n as f64).cos())).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    Ok(w)
}

/// Schmidt values of the Hann weight state across the cut after the lowest
/// `n_a` qubits. Each side is spanned by `{1, sin(αn), 1 − cos(αn)}`, so the
/// spectrum comes from a 3×3 core built from per-side Gram matrices.
pub fn hann_cut_spectrum(num_qubits: usize, n_a: usize) -> Result<Vec<f64>> {
    if num_qubits < 2 || n_a == 0 || n_a >= num_qubits || num_qubits > 32 {
        return Err(invalid(format!("cut after {n_a} of {num_qubits} qubits")));
    }
    let alpha = std::f64::consts::PI / (1u64 << num_qubits) as f64;
    let len_a = 1u64 << n_a;
    let len_b = 1u64 << (num_qubits - n_a);
    let fa = side_factor(len_a, alpha)?;
    let fb = side_factor(len_b, alpha * len_a as f64)?;
    // w = 1 − ½f₂⊗1 − ½·1⊗f₂ + ½f₂⊗f₂ − ½f₁⊗f₁ in the basis (1, f₁, f₂).
    let coupling = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -0.5, 0.0, -0.5, 0.0, -0.5, 0.0, 0.5]);
    let core = &fa * coupling * fb.transpose();
    let core = ComplexMatrix::from_fn(3, 3, |r, c| C64::new(core[(r, c)], 0.0))?;
    let mut s = singular_values(&core)?;
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.iter_mut().for_each(|x| *x /= norm);
    Ok(s)
}

/// `F` with `FᵀF = G`, the Gram matrix of `(1, sin(θn), 2sin²(θn/2))` over
/// `n < len`. The Gram is scaled to unit diagonal before diagonalizing.
fn side_factor(len: u64, theta: f64) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::<f64>::zeros(3, 3);
    for n in 0..len {
        let x = theta * n as f64;
        let h = (x / 2.0).sin();
        let f = [1.0, x.sin(), 2.0 * h * h];
        for r in 0..3 {
            for c in 0..3 {
                g[(r, c)] += f[r] * f[c];
            }
        }
    }
    let d: Vec<f64> = (0..3).map(|i| g[(i, i)].sqrt()).collect();
    let scaled = ComplexMatrix::from_fn(3, 3, |r, c| {
        let v = if d[r] > 0.0 && d[c] > 0.0 { g[(r, c)] / (d[r] * d[c]) } else { 0.0 };
        C64::new(v, 0.0)
    })?;
    let (vals, vecs) = crate::linalg::eigh(&scaled)?;
    Ok(DMatrix::from_fn(3, 3, |r, c| vals[r].max(0.0).sqrt() * vecs[(c, r)].re * d[c]))
}

#[derive(Clone, Debug)]
pub struct WeightFit {
    pub circuit: LayeredCircuit,
    pub trace: SweepTrace,
    /// `1 − |⟨w|Q|0⟩|²`.
    pub infidelity: f64,
}

/// Sweeps a staircase circuit so that its first column approximates the
/// weight state.
pub fn fit_weight_state(weights: &[f64], layers: usize, gate_size: usize, seed: u64, config: &SweepConfig) -> Result<WeightFit> {
    let target = weight_state(weights)?;
    let n = target.num_qubits();
    let mut circuit = LayeredCircuit::new(n, layers, gate_size, GateInit::Haar, seed)?;
    let column = ComplexMatrix::from_fn(target.dim(), 1, |r, _| target.amplitudes()[r])?;
    let trace = fit_circuit(&mut circuit, &column, config)?;
    let overlap: C64 = circuit.column(0).iter().zip(target.amplitudes()).map(|(a, b)| b.conj() * a).sum();
    Ok(WeightFit { circuit, trace, infidelity: 1.0 - overlap.norm_sqr() })
}
