//! Sequential gate-by-gate sweep optimization.
//!
//! A single circuit `Q` is fitted to weighted target columns `t_k` by
//! maximizing `Re Σ_k ⟨t_k|Q|k⟩`. Each gate sees the rest of the circuit
//! through a small environment matrix `F`, and the best unitary for that gate
//! follows from the SVD of `F`. Bipartite objectives alternate between the
//! two subsystem circuits, each step being a single-circuit fit.
//!
//! Partially contracted states are cached, so one pass over `L` gates costs
//! `O(L)` gate applications per target column.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{LayeredCircuit, ReferenceWeights};
use crate::error::{dim, invalid, Result};
use crate::linalg::{svd, ComplexMatrix, C64, ONE, ZERO};
use crate::state::{apply_with_layout, coefficient_matrix, BipartiteCut, GateLayout, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Forward then backward over the gates, counted as one sweep.
    #[default]
    ForwardBackward,
    Forward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rel_tol: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    /// Keep the objective after every local update.
    pub record_updates: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_sweeps: 100_000, order: SweepOrder::ForwardBackward, record_updates: false }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(invalid(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_sweeps == 0 {
            return Err(invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub objective: f64,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

/// Objective per sweep; entry 0 is the starting point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub sweeps: Vec<SweepRecord>,
    pub updates: Vec<f64>,
    pub converged: bool,
}

impl SweepTrace {
    pub fn final_objective(&self) -> f64 {
        self.sweeps.last().map_or(0.0, |r| r.objective)
    }

    pub fn sweeps_run(&self) -> usize {
        self.sweeps.len().saturating_sub(1)
    }

    fn push(&mut self, objective: f64, start: &Instant) {
        let sweep = self.sweeps.len();
        self.sweeps.push(SweepRecord { sweep, objective, wall_time: start.elapsed().as_secs_f64() });
    }
}

/// Column-stacked statevectors.
struct Block {
    dim: usize,
    data: Vec<C64>,
}

impl Block {
    fn basis(dim: usize, count: usize) -> Self {
        let mut data = vec![ZERO; dim * count];
        for k in 0..count {
            data[k * dim + k] = ONE;
        }
        Self { dim, data }
    }

    fn from_matrix(m: &DMatrix<C64>) -> Self {
        // nalgebra storage is column-major.
        Self { dim: m.nrows(), data: m.as_slice().to_vec() }
    }

    fn apply(&mut self, gate: &DMatrix<C64>, layout: &GateLayout) {
        apply_with_layout(&mut self.data, gate, layout);
    }

    fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.dim, self.data.len() / self.dim, &self.data)
    }
}

/// `F = Σ_k Tr_rest |a_k⟩⟨b_k|` on the gate's qubits.
fn contract(a: &Block, b: &Block, layout: &GateLayout) -> DMatrix<C64> {
    let offsets = layout.offsets();
    let size = offsets.len();
    let mut acc = vec![ZERO; size * size];
    let mut xa = vec![ZERO; size];
    let mut xb = vec![ZERO; size];
    for (ca, cb) in a.data.chunks_exact(a.dim).zip(b.data.chunks_exact(b.dim)) {
        for r in 0..layout.blocks() {
            let base = layout.base(r);
            for (j, off) in offsets.iter().enumerate() {
                xa[j] = ca[base + off];
                xb[j] = cb[base + off].conj();
            }
            for (j, x) in xa.iter().enumerate() {
                let row = &mut acc[j * size..(j + 1) * size];
                for (slot, y) in row.iter_mut().zip(&xb) {
                    *slot += x * y;
                }
            }
        }
    }
    DMatrix::from_row_slice(size, size, &acc)
}

/// Unitary maximizing `Re tr(G·F)`, with the attained value `Σ σ(F)`.
/// For `F = X D Y†` the maximizer is `G = Y X†`.
pub fn local_update(f: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    if f.rows() != f.cols() {
        return Err(dim(format!("environment must be square, got {}x{}", f.rows(), f.cols())));
    }
    let dec = svd(f)?;
    let g = dec.right.matrix() * dec.left.matrix().adjoint();
    Ok((ComplexMatrix::wrap(g), dec.values.iter().sum()))
}

fn check_targets(q: &LayeredCircuit, targets: &ComplexMatrix) -> Result<()> {
    let d = 1usize << q.num_qubits();
    if targets.rows() != d || targets.cols() == 0 || targets.cols() > d {
        return Err(dim(format!(
            "{}x{} target block for a {}-qubit circuit",
            targets.rows(),
            targets.cols(),
            q.num_qubits()
        )));
    }
    Ok(())
}

/// `Re Σ_k ⟨t_k|Q|k⟩` for the columns `t_k` of `targets`.
pub fn circuit_objective(q: &LayeredCircuit, targets: &ComplexMatrix) -> Result<f64> {
    check_targets(q, targets)?;
    let d = 1usize << q.num_qubits();
    let mut a = Block::basis(d, targets.cols());
    for g in q.gates() {
        a.apply(g.matrix().matrix(), &GateLayout::new(d, g.targets()));
    }
    Ok(a.data.iter().zip(targets.as_slice()).map(|(x, t)| (t.conj() * x).re).sum())
}

/// Environment of gate `index`: `Re tr(G·F)` is the objective with that gate
/// replaced by `G`. Computed from scratch.
pub fn environment_tensor(q: &LayeredCircuit, index: usize, targets: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_targets(q, targets)?;
    if index >= q.num_gates() {
        return Err(invalid(format!("gate index {index} out of range")));
    }
    let d = 1usize << q.num_qubits();
    let mut a = Block::basis(d, targets.cols());
    let mut b = Block::from_matrix(targets.matrix());
    for g in &q.gates()[..index] {
        a.apply(g.matrix().matrix(), &GateLayout::new(d, g.targets()));
    }
    for g in q.gates()[index + 1..].iter().rev() {
        b.apply(&g.matrix().matrix().adjoint(), &GateLayout::new(d, g.targets()));
    }
    Ok(ComplexMatrix::wrap(contract(&a, &b, &GateLayout::new(d, q.gates()[index].targets()))))
}

/// One pass over the gates of `q`. Returns the objective after the last
/// update (or `None` when the circuit has no gates).
fn pass(q: &mut LayeredCircuit, targets: &DMatrix<C64>, forward: bool, updates: Option<&mut Vec<f64>>) -> Result<Option<f64>> {
    let d = 1usize << q.num_qubits();
    let layouts: Vec<GateLayout> = q.gates().iter().map(|g| GateLayout::new(d, g.targets())).collect();
    let mut a = Block::basis(d, targets.ncols());
    let mut b = Block::from_matrix(targets);
    if forward {
        for (g, l) in q.gates().iter().zip(&layouts).rev() {
            b.apply(&g.matrix().matrix().adjoint(), l);
        }
    } else {
        for (g, l) in q.gates().iter().zip(&layouts) {
            a.apply(g.matrix().matrix(), l);
        }
    }
    let mut last = None;
    let mut log = updates;
    let order: Vec<usize> = if forward { (0..q.num_gates()).collect() } else { (0..q.num_gates()).rev().collect() };
    for n in order {
        let layout = &layouts[n];
        if forward {
            b.apply(q.gates()[n].matrix().matrix(), layout);
        } else {
            a.apply(&q.gates()[n].matrix().matrix().adjoint(), layout);
        }
        let f = ComplexMatrix::wrap(contract(&a, &b, layout));
        let (g, value) = local_update(&f)?;
        if forward {
            a.apply(g.matrix(), layout);
        } else {
            b.apply(&g.matrix().adjoint(), layout);
        }
        q.gate_mut(n).set_matrix(g);
        if let Some(log) = log.as_deref_mut() {
            log.push(value);
        }
        last = Some(value);
    }
    Ok(last)
}

fn converged(previous: f64, current: f64, rel_tol: f64) -> bool {
    (current - previous).abs() <= rel_tol * current.abs()
}

/// Fits `q` to the columns of `targets` in place.
pub fn fit_circuit(q: &mut LayeredCircuit, targets: &ComplexMatrix, config: &SweepConfig) -> Result<SweepTrace> {
    config.validate()?;
    let start = Instant::now();
    let mut trace = SweepTrace::default();
    let mut current = circuit_objective(q, targets)?;
    trace.push(current, &start);
    for _ in 0..config.max_sweeps {
        let log = config.record_updates.then_some(&mut trace.updates);
        let mut value = pass(q, targets.matrix(), true, log)?;
        if config.order == SweepOrder::ForwardBackward {
            let log = config.record_updates.then_some(&mut trace.updates);
            value = pass(q, targets.matrix(), false, log)?.or(value);
        }
        let next = value.unwrap_or(current);
        trace.push(next, &start);
        let done = converged(current, next, config.rel_tol);
        current = next;
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// `Re Σ_k w_k ⟨U k, V k|Φ⟩` for a fixed target across a cut.
#[derive(Clone, Debug)]
pub struct BipartiteObjective {
    coefficients: ComplexMatrix,
    weights: Vec<f64>,
    n_a: usize,
    n_b: usize,
}

impl BipartiteObjective {
    pub fn new(target: &StateVector, cut: &BipartiteCut, weights: &ReferenceWeights) -> Result<Self> {
        Self::from_coefficients(coefficient_matrix(target, cut)?, &weights.weights[..weights.support()])
    }

    /// Leading weights are attached to basis indices `0, 1, …`.
    pub fn from_coefficients(coefficients: ComplexMatrix, weights: &[f64]) -> Result<Self> {
        let (ra, cb) = (coefficients.rows(), coefficients.cols());
        if !ra.is_power_of_two() || !cb.is_power_of_two() || ra < 2 || cb < 2 {
            return Err(dim(format!("{ra}x{cb} coefficient matrix")));
        }
        if weights.is_empty() || weights.len() > ra.min(cb) {
            return Err(dim(format!("{} weights for a {ra}x{cb} coefficient matrix", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        let (n_a, n_b) = (ra.trailing_zeros() as usize, cb.trailing_zeros() as usize);
        Ok(Self { coefficients, weights: weights.to_vec(), n_a, n_b })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coefficients(&self) -> &ComplexMatrix {
        &self.coefficients
    }

    fn check(&self, u: &LayeredCircuit, v: &LayeredCircuit) -> Result<()> {
        if u.num_qubits() != self.n_a || v.num_qubits() != self.n_b {
            return Err(dim(format!(
                "circuits on {}|{} qubits for a {}|{} objective",
                u.num_qubits(),
                v.num_qubits(),
                self.n_a,
                self.n_b
            )));
        }
        Ok(())
    }

    /// Columns `w_k C·conj(V|k⟩)`: the targets seen by `U` with `V` fixed.
    fn targets_for_u(&self, v: &LayeredCircuit) -> DMatrix<C64> {
        let cols = circuit_columns(v, self.weights.len()).map(|z| z.conj());
        self.scale(self.coefficients.matrix() * cols)
    }

    /// Columns `w_k Cᵀ·conj(U|k⟩)`: the targets seen by `V` with `U` fixed.
    fn targets_for_v(&self, u: &LayeredCircuit) -> DMatrix<C64> {
        let cols = circuit_columns(u, self.weights.len()).map(|z| z.conj());
        self.scale(self.coefficients.matrix().transpose() * cols)
    }

    fn scale(&self, mut m: DMatrix<C64>) -> DMatrix<C64> {
        for (k, &w) in self.weights.iter().enumerate() {
            m.column_mut(k).iter_mut().for_each(|z| *z *= w);
        }
        m
    }

    pub fn evaluate(&self, u: &LayeredCircuit, v: &LayeredCircuit) -> Result<f64> {
        self.check(u, v)?;
        let t = self.targets_for_u(v);
        circuit_objective(u, &ComplexMatrix::wrap(t))
    }
}

fn circuit_columns(q: &LayeredCircuit, count: usize) -> DMatrix<C64> {
    let d = 1usize << q.num_qubits();
    let mut a = Block::basis(d, count);
    for g in q.gates() {
        a.apply(g.matrix().matrix(), &GateLayout::new(d, g.targets()));
    }
    a.to_matrix()
}

/// Alternating sweeps over `u` then `v`, in place.
pub fn sweep_optimize(
    u: &mut LayeredCircuit,
    v: &mut LayeredCircuit,
    objective: &BipartiteObjective,
    config: &SweepConfig,
) -> Result<SweepTrace> {
    config.validate()?;
    objective.check(u, v)?;
    let start = Instant::now();
    let mut trace = SweepTrace::default();
    let mut current = objective.evaluate(u, v)?;
    trace.push(current, &start);
    let both = config.order == SweepOrder::ForwardBackward;
    for _ in 0..config.max_sweeps {
        let mut value = None;
        let t = objective.targets_for_u(v);
        value = pass(u, &t, true, config.record_updates.then_some(&mut trace.updates))?.or(value);
        if both {
            value = pass(u, &t, false, config.record_updates.then_some(&mut trace.updates))?.or(value);
        }
        let t = objective.targets_for_v(u);
        value = pass(v, &t, true, config.record_updates.then_some(&mut trace.updates))?.or(value);
        if both {
            value = pass(v, &t, false, config.record_updates.then_some(&mut trace.updates))?.or(value);
        }
        let next = value.unwrap_or(current);
        trace.push(next, &start);
        let done = converged(current, next, config.rel_tol);
        current = next;
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
