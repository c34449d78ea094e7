//! Exact canonical-form MPS of a bipartite state and its compilation into
//! staircase circuits of multi-qubit unitaries.
//!
//! Chain order is `subsystem_a` followed by `subsystem_b`. Tensors are stored
//! as `(left bond, physical, right bond)`. Left tensors are isometric from the
//! right bond, right tensors from the left bond, and the center weights sit on
//! the bond between the two halves.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::Gate;
use crate::error::{dim, invalid, Result};
use crate::linalg::{complete_unitary, svd, ComplexMatrix, C64, ZERO};
use crate::state::{coefficient_matrix, BipartiteCut, StateVector};

/// Singular values at or below this are treated as zero.
pub const RANK_TOL: f64 = 1e-13;
/// Largest tolerated canonical-condition deviation.
pub const CANONICAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    pub shape: [usize; 3],
    /// Row-major over `(left, physical, right)`.
    pub data: Vec<C64>,
}

impl Tensor3 {
    fn zeros(shape: [usize; 3]) -> Self {
        Self { shape, data: vec![ZERO; shape.iter().product()] }
    }

    fn offset(&self, l: usize, x: usize, r: usize) -> usize {
        (l * self.shape[1] + x) * self.shape[2] + r
    }

    pub fn get(&self, l: usize, x: usize, r: usize) -> C64 {
        self.data[self.offset(l, x, r)]
    }

    fn set(&mut self, l: usize, x: usize, r: usize, z: C64) {
        let o = self.offset(l, x, r);
        self.data[o] = z;
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    /// `max |Σ_{l,x} A*[l,x,r] A[l,x,r'] − δ|`.
    fn left_deviation(&self) -> f64 {
        let [dl, dx, dr] = self.shape;
        let mut worst: f64 = 0.0;
        for r in 0..dr {
            for s in 0..dr {
                let mut g = ZERO;
                for l in 0..dl {
                    for x in 0..dx {
                        g += self.get(l, x, r).conj() * self.get(l, x, s);
                    }
                }
                let target = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// `max |Σ_{x,r} B[l,x,r] B*[l',x,r] − δ|`.
    fn right_deviation(&self) -> f64 {
        let [dl, dx, dr] = self.shape;
        let mut worst: f64 = 0.0;
        for l in 0..dl {
            for m in 0..dl {
                let mut g = ZERO;
                for x in 0..dx {
                    for r in 0..dr {
                        g += self.get(l, x, r) * self.get(m, x, r).conj();
                    }
                }
                let target = if l == m { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMps {
    /// Qubit index at each chain position.
    pub sites: Vec<usize>,
    pub left: Vec<Tensor3>,
    pub right: Vec<Tensor3>,
    /// Non-increasing Schmidt values on the center bond.
    pub weights: Vec<f64>,
    /// `bonds[s]` is the dimension left of chain position `s`; `bonds[0] = bonds[n] = 1`.
    pub bonds: Vec<usize>,
}

fn keep(values: &[f64], max_bond: Option<usize>) -> usize {
    let rank = values.iter().filter(|&&v| v > RANK_TOL).count().max(1);
    max_bond.map_or(rank, |m| rank.min(m))
}

/// `U V†` from the SVD, the closest isometry in Frobenius norm.
fn polar_isometry(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = svd(m)?;
    Ok(ComplexMatrix::wrap(d.left.matrix() * d.right.matrix().adjoint()))
}

/// Left tensors of an isometry `X[r, k]` whose row index carries the physical
/// bits with chain position 0 as the least significant bit.
fn left_tensors(x: &ComplexMatrix, n: usize, max_bond: Option<usize>) -> Result<(Vec<Tensor3>, Vec<usize>)> {
    let chi = x.cols();
    let mut tensors = Vec::with_capacity(n);
    let mut bonds = vec![1];
    // rem[(l, t)] with t = physical remainder + 2^m · k.
    let mut rem = ComplexMatrix::from_fn(1, x.rows() * chi, |_, t| {
        let (phys, k) = (t % x.rows(), t / x.rows());
        x[(phys, k)]
    })?;
    for m in (1..=n).rev() {
        let dl = rem.rows();
        let cols = rem.cols() / 2;
        let block = 1usize << (m - 1);
        let reshaped = ComplexMatrix::from_fn(2 * dl, cols, |row, t| {
            let (l, bit) = (row / 2, row % 2);
            let (rest, k) = (t % block, t / block);
            rem[(l, bit + 2 * rest + 2 * block * k)]
        })?;
        if m == 1 {
            let iso = if max_bond.is_some() { polar_isometry(&reshaped)? } else { reshaped };
            let mut t = Tensor3::zeros([dl, 2, chi]);
            for row in 0..2 * dl {
                for k in 0..chi {
                    t.set(row / 2, row % 2, k, iso[(row, k)]);
                }
            }
            tensors.push(t);
            break;
        }
        let d = svd(&reshaped)?;
        let r = keep(&d.values, max_bond);
        let mut t = Tensor3::zeros([dl, 2, r]);
        for row in 0..2 * dl {
            for a in 0..r {
                t.set(row / 2, row % 2, a, d.left[(row, a)]);
            }
        }
        tensors.push(t);
        bonds.push(r);
        let right = d.right.matrix();
        rem = ComplexMatrix::from_fn(r, cols, |a, t| right[(t, a)].conj() * d.values[a])?;
    }
    bonds.push(chi);
    Ok((tensors, bonds))
}

/// Right tensors of an isometry `Y[c, k]`, chain position 0 (next to the
/// center) being the least significant bit of `c`.
fn right_tensors(y: &ComplexMatrix, n: usize, max_bond: Option<usize>) -> Result<(Vec<Tensor3>, Vec<usize>)> {
    let chi = y.cols();
    let mut tensors = Vec::with_capacity(n);
    let mut bonds = vec![1];
    // rem[(t, r)] with t = physical remainder + 2^m · k.
    let mut rem = ComplexMatrix::from_fn(y.rows() * chi, 1, |t, _| y[(t % y.rows(), t / y.rows())])?;
    for m in (1..=n).rev() {
        let dr = rem.cols();
        let block = 1usize << (m - 1);
        let rows = rem.rows() / 2;
        let reshaped = ComplexMatrix::from_fn(rows, 2 * dr, |t, col| {
            let (bit, r) = (col / dr, col % dr);
            let (rest, k) = (t % block, t / block);
            rem[(rest + block * bit + 2 * block * k, r)]
        })?;
        if m == 1 {
            let iso = if max_bond.is_some() { polar_isometry(&reshaped.adjoint())?.adjoint() } else { reshaped };
            let mut t = Tensor3::zeros([chi, 2, dr]);
            for k in 0..chi {
                for col in 0..2 * dr {
                    t.set(k, col / dr, col % dr, iso[(k, col)]);
                }
            }
            tensors.push(t);
            break;
        }
        let d = svd(&reshaped)?;
        let r = keep(&d.values, max_bond);
        let mut t = Tensor3::zeros([r, 2, dr]);
        for a in 0..r {
            for col in 0..2 * dr {
                t.set(a, col / dr, col % dr, d.right[(col, a)].conj());
            }
        }
        tensors.push(t);
        bonds.push(r);
        let left = d.left.matrix();
        rem = ComplexMatrix::from_fn(rows, r, |t, a| left[(t, a)] * d.values[a])?;
    }
    tensors.reverse();
    bonds.push(chi);
    bonds.reverse();
    Ok((tensors, bonds))
}

/// Canonical MPS with the center on the cut. `max_bond` truncates every bond
/// to the largest singular values and renormalizes the center weights.
pub fn state_to_mps(state: &StateVector, cut: &BipartiteCut, max_bond: Option<usize>) -> Result<CanonicalMps> {
    state.require_normalized()?;
    if max_bond == Some(0) {
        return Err(invalid("maximum bond dimension must be positive"));
    }
    let coef = coefficient_matrix(state, cut)?;
    let d = svd(&coef)?;
    let chi = keep(&d.values, max_bond);
    let mut weights = d.values[..chi].to_vec();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    weights.iter_mut().for_each(|w| *w /= norm);
    let x = ComplexMatrix::from_fn(coef.rows(), chi, |r, k| d.left[(r, k)])?;
    let y = ComplexMatrix::from_fn(coef.cols(), chi, |c, k| d.right[(c, k)].conj())?;
    let (left, mut bonds) = left_tensors(&x, cut.n_a(), max_bond)?;
    let (right, right_bonds) = right_tensors(&y, cut.n_b(), max_bond)?;
    bonds.pop();
    bonds.extend(right_bonds);
    let sites = cut.subsystem_a().iter().chain(cut.subsystem_b()).copied().collect();
    Ok(CanonicalMps { sites, left, right, weights, bonds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReport {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `|Σ W² − 1|`.
    pub weights: f64,
}

impl CanonicalReport {
    pub fn max_deviation(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(self.weights, |a, &b| a.max(b))
    }

    pub fn passes(&self) -> bool {
        self.max_deviation() <= CANONICAL_TOL
    }
}

pub fn verify_canonical(mps: &CanonicalMps) -> CanonicalReport {
    let total: f64 = mps.weights.iter().map(|w| w * w).sum();
    CanonicalReport {
        left: mps.left.iter().map(Tensor3::left_deviation).collect(),
        right: mps.right.iter().map(Tensor3::right_deviation).collect(),
        weights: if mps.sites.is_empty() { 0.0 } else { (total - 1.0).abs() },
    }
}

impl CanonicalMps {
    pub fn num_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn n_a(&self) -> usize {
        self.left.len()
    }

    pub fn n_b(&self) -> usize {
        self.right.len()
    }

    /// Center bond dimension.
    pub fn center_bond(&self) -> usize {
        self.weights.len()
    }

    /// Contracts the chain back into a statevector.
    pub fn to_state(&self) -> Result<StateVector> {
        let n = self.num_qubits();
        // Row vectors over the running right bond, one per physical prefix.
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let tensors = self.left.iter().chain(&self.right);
        for (pos, t) in tensors.enumerate() {
            let [dl, _, dr] = t.shape;
            if pos == self.n_a() {
                for (k, w) in self.weights.iter().enumerate() {
                    acc.column_mut(k).iter_mut().for_each(|z| *z *= *w);
                }
            }
            if acc.ncols() != dl {
                return Err(dim(format!("bond mismatch at chain position {pos}")));
            }
            let prefixes = acc.nrows();
            let mut next = DMatrix::from_element(2 * prefixes, dr, ZERO);
            for p in 0..prefixes {
                for x in 0..2 {
                    for r in 0..dr {
                        next[(p + prefixes * x, r)] = (0..dl).map(|l| acc[(p, l)] * t.get(l, x, r)).sum();
                    }
                }
            }
            acc = next;
        }
        let mut amps = vec![ZERO; 1 << n];
        for (chain_index, z) in acc.column(0).iter().enumerate() {
            let idx = (0..n).filter(|&s| chain_index >> s & 1 == 1).fold(0, |a, s| a | 1 << self.sites[s]);
            amps[idx] = *z;
        }
        StateVector::new(n, amps)
    }

    /// Checks `χ_{i−1} ≤ min(2χ_i, 2^{i−1}χ)` on both halves, `i` counting
    /// outward from the center bond. Returns the offending chain bonds.
    pub fn bond_bound_violations(&self) -> Vec<usize> {
        let (na, chi) = (self.n_a(), self.center_bond());
        let mut bad = Vec::new();
        for i in 1..=na {
            let (inner, outer) = (self.bonds[na - i + 1], self.bonds[na - i]);
            if inner > (2 * outer).min(chi << (i - 1)) {
                bad.push(na - i + 1);
            }
        }
        for i in 1..=self.n_b() {
            let (inner, outer) = (self.bonds[na + i - 1], self.bonds[na + i]);
            if inner > (2 * outer).min(chi << (i - 1)) {
                bad.push(na + i - 1);
            }
        }
        bad
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn ceil_log2(x: usize) -> usize {
    x.next_power_of_two().trailing_zeros() as usize
}

/// Gates generating the state from the center-weight state, each half
/// applied outward from the cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpsCircuit {
    pub num_qubits: usize,
    pub a_gates: Vec<Gate>,
    pub b_gates: Vec<Gate>,
    pub weights: Vec<f64>,
    /// Qubits holding the index `k` of the center weight, least significant first.
    pub a_register: Vec<usize>,
    pub b_register: Vec<usize>,
}

impl MpsCircuit {
    /// `Σ_k W_k |k⟩_A |k⟩_B` on the two index registers.
    pub fn center_state(&self) -> Result<StateVector> {
        let mut amps = vec![ZERO; 1 << self.num_qubits];
        for (k, w) in self.weights.iter().enumerate() {
            let spread = |reg: &[usize]| reg.iter().enumerate().filter(|(b, _)| k >> b & 1 == 1).fold(0, |a, (_, &q)| a | 1 << q);
            amps[spread(&self.a_register) | spread(&self.b_register)] = C64::new(*w, 0.0);
        }
        StateVector::new(self.num_qubits, amps)
    }

    pub fn gate_sizes(&self) -> Vec<usize> {
        self.a_gates.iter().chain(&self.b_gates).map(|g| g.targets().len()).collect()
    }

    pub fn to_state(&self) -> Result<StateVector> {
        let mut s = self.center_state()?;
        for g in self.a_gates.iter().chain(&self.b_gates) {
            s.apply_gate_mut(g.matrix(), g.targets())?;
        }
        Ok(s)
    }
}

/// Places the isometry's column `a` at gate column `a << shift` and completes
/// the remaining columns.
fn embed(iso: &ComplexMatrix, shift: usize) -> Result<ComplexMatrix> {
    let u = complete_unitary(iso)?;
    let n = u.rows();
    let chi = iso.cols();
    let mut order: Vec<usize> = (0..chi).map(|a| a << shift).collect();
    order.extend((0..n).filter(|c| c & ((1 << shift) - 1) != 0 || c >> shift >= chi));
    let mut m = DMatrix::from_element(n, n, ZERO);
    for (j, &c) in order.iter().enumerate() {
        m.set_column(c, &u.matrix().column(j));
    }
    Ok(ComplexMatrix::wrap(m))
}

/// Staircase circuit reproducing the MPS. The gate for the tensor between an
/// inner bond `χ_in` and an outer bond `χ_out` acts on
/// `ceil(log2 max(χ_in, 2χ_out))` qubits.
pub fn mps_to_unitaries(mps: &CanonicalMps) -> Result<MpsCircuit> {
    let report = verify_canonical(mps);
    if !report.passes() {
        return Err(invalid(format!("MPS is not canonical (deviation {:.3e})", report.max_deviation())));
    }
    let (na, nb) = (mps.n_a(), mps.n_b());
    let b0 = ceil_log2(mps.center_bond());
    let mut a_gates = Vec::with_capacity(na);
    for s in (0..na).rev() {
        let t = &mps.left[s];
        let [chi_out, _, chi_in] = t.shape;
        let (b_in, b_out) = (ceil_log2(chi_in), ceil_log2(chi_out));
        let w = (b_out + 1).max(b_in);
        // Physical bit on top, outer bond just below it.
        let iso = ComplexMatrix::from_fn(1 << w, chi_in, |row, a| {
            let x = row >> (w - 1);
            let l = (row & ((1 << (w - 1)) - 1)) >> (w - 1 - b_out);
            let low = row & ((1 << (w - 1 - b_out)) - 1);
            if l < chi_out && low == 0 { t.get(l, x, a) } else { ZERO }
        })?;
        let targets = (s + 1 - w..=s).map(|p| mps.sites[p]).collect();
        a_gates.push(Gate::new(targets, embed(&iso, w - b_in)?)?);
    }
    let mut b_gates = Vec::with_capacity(nb);
    for j in 0..nb {
        let t = &mps.right[j];
        let [chi_in, _, chi_out] = t.shape;
        let (b_in, b_out) = (ceil_log2(chi_in), ceil_log2(chi_out));
        let w = (b_out + 1).max(b_in);
        // Physical bit at the bottom, outer bond above it.
        let iso = ComplexMatrix::from_fn(1 << w, chi_in, |row, a| {
            let (y, r) = (row & 1, row >> 1);
            if r < chi_out { t.get(a, y, r) } else { ZERO }
        })?;
        let targets = (j..j + w).map(|p| mps.sites[na + p]).collect();
        b_gates.push(Gate::new(targets, embed(&iso, 0)?)?);
    }
    Ok(MpsCircuit {
        num_qubits: mps.num_qubits(),
        a_gates,
        b_gates,
        weights: mps.weights.clone(),
        a_register: mps.sites[na - b0..na].to_vec(),
        b_register: mps.sites[na..na + b0].to_vec(),
    })
}
