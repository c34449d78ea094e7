//! Dense statevectors and bipartite reshaping.
//!
//! Qubit `q` (0-based) is bit `q` of the basis index: qubit 0 is the least
//! significant bit. For a cut, row index bit `i` of the coefficient matrix is
//! qubit `subsystem_a[i]` and column index bit `j` is qubit `subsystem_b[j]`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, QsvdError, Result};
use crate::linalg::{svd, ComplexMatrix, C64, ONE, ZERO};

/// Largest register accepted by dense constructors.
pub const MAX_QUBITS: usize = 24;
pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-12;

const BINARY_MAGIC: &[u8; 4] = b"QSTV";
const BINARY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    num_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateRepr> for StateVector {
    type Error = QsvdError;
    fn try_from(r: StateRepr) -> Result<Self> {
        StateVector::new(r.num_qubits, r.amplitudes.iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        StateRepr { num_qubits: s.num_qubits, amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect() }
    }
}

fn norm_of(amps: &[C64]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl StateVector {
    /// Unnormalized state; checks length, finiteness and the qubit cap.
    pub fn new(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(invalid(format!("{num_qubits} qubits exceeds the dense cap of {MAX_QUBITS}")));
        }
        if amplitudes.len() != 1usize << num_qubits {
            return Err(dim(format!("{num_qubits} qubits need {} amplitudes, got {}", 1usize << num_qubits, amplitudes.len())));
        }
        if let Some(i) = amplitudes.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QsvdError::NonFinite { row: i, col: 0 });
        }
        Ok(Self { num_qubits, amplitudes })
    }

    /// Like [`StateVector::new`] but requires unit norm within `1e-12`.
    pub fn normalized(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let s = Self::new(num_qubits, amplitudes)?;
        s.require_normalized()?;
        Ok(s)
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(invalid("cannot normalize the zero vector"));
        }
        self.amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS || index >= 1usize << num_qubits {
            return Err(invalid(format!("basis index {index} out of range for {num_qubits} qubits")));
        }
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Ok(Self { num_qubits, amplitudes: amps })
    }

    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(invalid(format!("{num_qubits} qubits exceeds the dense cap of {MAX_QUBITS}")));
        }
        let amps = (0..1usize << num_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self { num_qubits, amplitudes: amps }.normalize()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            Err(QsvdError::NotNormalized(n))
        } else {
            Ok(())
        }
    }

    /// Applies a `2^d × 2^d` unitary to `d` distinct target qubits.
    /// `targets[0]` is the least significant bit of the gate's index.
    pub fn apply_gate(&self, gate: &ComplexMatrix, targets: &[usize]) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_gate_mut(gate, targets)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &ComplexMatrix, targets: &[usize]) -> Result<()> {
        check_targets(self.num_qubits, gate, targets)?;
        gate.check_unitary(UNITARY_TOL)?;
        apply_in_place(&mut self.amplitudes, gate.matrix(), targets);
        Ok(())
    }

    /// Relabels qubits: qubit `i` of the result is qubit `perm[i]` of `self`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<StateVector> {
        check_permutation(self.num_qubits, perm)?;
        let mut out = vec![ZERO; self.dim()];
        for (s, amp) in self.amplitudes.iter().enumerate() {
            let mut t = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                t |= ((s >> p) & 1) << i;
            }
            out[t] = *amp;
        }
        Ok(Self { num_qubits: self.num_qubits, amplitudes: out })
    }

    /// Little-endian binary: magic `QSTV`, u32 version, u32 qubit count, then
    /// interleaved `re, im` f64 pairs in basis order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.num_qubits as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.dim());
        for z in &self.amplitudes {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<StateVector> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[0..4] != BINARY_MAGIC {
            return Err(invalid("bad statevector magic"));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(invalid(format!("unsupported statevector version {version}")));
        }
        let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        if n > MAX_QUBITS {
            return Err(invalid(format!("{n} qubits exceeds the dense cap of {MAX_QUBITS}")));
        }
        let mut buf = vec![0u8; 16 << n];
        r.read_exact(&mut buf)?;
        let amps = buf
            .chunks_exact(16)
            .map(|c| C64::new(f64::from_le_bytes(c[0..8].try_into().unwrap()), f64::from_le_bytes(c[8..16].try_into().unwrap())))
            .collect();
        StateVector::new(n, amps)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<StateVector> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<StateVector> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `⟨a|b⟩`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.num_qubits != b.num_qubits {
        return Err(dim(format!("overlap of {}- and {}-qubit states", a.num_qubits, b.num_qubits)));
    }
    Ok(inner(&a.amplitudes, &b.amplitudes))
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(dim(format!("permutation of length {} for {n} qubits", perm.len())));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(invalid(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn check_targets(n: usize, gate: &ComplexMatrix, targets: &[usize]) -> Result<()> {
    let size = 1usize << targets.len();
    if gate.rows() != size || gate.cols() != size {
        return Err(dim(format!("{}x{} gate on {} targets", gate.rows(), gate.cols(), targets.len())));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n || targets[..i].contains(&t) {
            return Err(invalid(format!("invalid targets {targets:?} for {n} qubits")));
        }
    }
    Ok(())
}

/// Precomputed index tables for applying a gate to fixed targets.
pub(crate) struct GateLayout {
    offsets: Vec<usize>,
    sorted: Vec<usize>,
    blocks: usize,
}

impl GateLayout {
    pub(crate) fn new(dim: usize, targets: &[usize]) -> Self {
        let d = targets.len();
        let offsets = (0..1usize << d)
            .map(|j| targets.iter().enumerate().map(|(t, &q)| ((j >> t) & 1) << q).sum())
            .collect();
        let mut sorted = targets.to_vec();
        sorted.sort_unstable();
        Self { offsets, sorted, blocks: dim >> d }
    }

    #[inline]
    pub(crate) fn base(&self, r: usize) -> usize {
        let mut b = r;
        for &t in &self.sorted {
            b = ((b >> t) << (t + 1)) | (b & ((1 << t) - 1));
        }
        b
    }

    pub(crate) fn blocks(&self) -> usize {
        self.blocks
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

/// `amps ← G amps` on `targets`, without validation.
pub(crate) fn apply_in_place(amps: &mut [C64], gate: &DMatrix<C64>, targets: &[usize]) {
    let layout = GateLayout::new(amps.len(), targets);
    apply_with_layout(amps, gate, &layout);
}

pub(crate) fn apply_with_layout(amps: &mut [C64], gate: &DMatrix<C64>, layout: &GateLayout) {
    let size = layout.offsets.len();
    // Row-major copy so the inner product walks contiguous memory.
    let g: Vec<C64> = (0..size * size).map(|k| gate[(k / size, k % size)]).collect();
    let mut buf = vec![ZERO; size];
    // `amps` may hold several statevectors back to back.
    for col in amps.chunks_exact_mut(layout.blocks * size) {
        for r in 0..layout.blocks {
            let base = layout.base(r);
            for (j, off) in layout.offsets.iter().enumerate() {
                buf[j] = col[base + off];
            }
            for (i, off) in layout.offsets.iter().enumerate() {
                let row = &g[i * size..(i + 1) * size];
                col[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// Ordered bipartition of the qubits into subsystems A and B.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CutRepr", into = "CutRepr")]
pub struct BipartiteCut {
    subsystem_a: Vec<usize>,
    subsystem_b: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CutRepr {
    subsystem_a: Vec<usize>,
    subsystem_b: Vec<usize>,
}

impl TryFrom<CutRepr> for BipartiteCut {
    type Error = QsvdError;
    fn try_from(r: CutRepr) -> Result<Self> {
        BipartiteCut::new(r.subsystem_a, r.subsystem_b)
    }
}

impl From<BipartiteCut> for CutRepr {
    fn from(c: BipartiteCut) -> Self {
        CutRepr { subsystem_a: c.subsystem_a, subsystem_b: c.subsystem_b }
    }
}

impl BipartiteCut {
    pub fn new(subsystem_a: Vec<usize>, subsystem_b: Vec<usize>) -> Result<Self> {
        let n = subsystem_a.len() + subsystem_b.len();
        if subsystem_a.is_empty() || subsystem_b.is_empty() {
            return Err(invalid("both subsystems must be non-empty"));
        }
        let all: Vec<usize> = subsystem_a.iter().chain(&subsystem_b).copied().collect();
        check_permutation(n, &all).map_err(|_| invalid(format!("cut {subsystem_a:?}|{subsystem_b:?} is not a partition of 0..{n}")))?;
        Ok(Self { subsystem_a, subsystem_b })
    }

    /// A = qubits `0..n_a`, B = the next `n_b` qubits.
    pub fn contiguous(n_a: usize, n_b: usize) -> Result<Self> {
        Self::new((0..n_a).collect(), (n_a..n_a + n_b).collect())
    }

    /// B is the complement of `subsystem_a`, ascending.
    pub fn from_subsystem_a(num_qubits: usize, subsystem_a: Vec<usize>) -> Result<Self> {
        let b = (0..num_qubits).filter(|q| !subsystem_a.contains(q)).collect();
        Self::new(subsystem_a, b)
    }

    pub fn subsystem_a(&self) -> &[usize] {
        &self.subsystem_a
    }

    pub fn subsystem_b(&self) -> &[usize] {
        &self.subsystem_b
    }

    pub fn n_a(&self) -> usize {
        self.subsystem_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.subsystem_b.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.n_a() + self.n_b()
    }

    /// Qubit order that makes this cut `contiguous(n_a, n_b)` after
    /// [`StateVector::permute_qubits`].
    pub fn permutation(&self) -> Vec<usize> {
        self.subsystem_a.iter().chain(&self.subsystem_b).copied().collect()
    }

    pub fn is_contiguous(&self) -> bool {
        self.permutation().iter().enumerate().all(|(i, &q)| i == q)
    }

    fn check_state(&self, num_qubits: usize) -> Result<()> {
        if num_qubits != self.num_qubits() {
            return Err(dim(format!("{}-qubit cut applied to a {num_qubits}-qubit state", self.num_qubits())));
        }
        Ok(())
    }

    /// Basis index of `|n⟩_A ⊗ |m⟩_B`.
    pub fn join_index(&self, n: usize, m: usize) -> usize {
        let mut s = 0;
        for (i, &q) in self.subsystem_a.iter().enumerate() {
            s |= ((n >> i) & 1) << q;
        }
        for (j, &q) in self.subsystem_b.iter().enumerate() {
            s |= ((m >> j) & 1) << q;
        }
        s
    }
}

/// `2^N × 2^M` matrix of amplitudes `C[n][m] = ⟨n,m|ψ⟩`.
pub fn coefficient_matrix(state: &StateVector, cut: &BipartiteCut) -> Result<ComplexMatrix> {
    cut.check_state(state.num_qubits)?;
    let (rows, cols) = (1usize << cut.n_a(), 1usize << cut.n_b());
    let amps = &state.amplitudes;
    Ok(ComplexMatrix::wrap(DMatrix::from_fn(rows, cols, |n, m| amps[cut.join_index(n, m)])))
}

/// Inverse of [`coefficient_matrix`].
pub fn from_coefficient_matrix(c: &ComplexMatrix, cut: &BipartiteCut) -> Result<StateVector> {
    if c.rows() != 1 << cut.n_a() || c.cols() != 1 << cut.n_b() {
        return Err(dim(format!("{}x{} coefficient matrix for a {}|{} cut", c.rows(), c.cols(), cut.n_a(), cut.n_b())));
    }
    let mut amps = vec![ZERO; 1 << cut.num_qubits()];
    for m in 0..c.cols() {
        for n in 0..c.rows() {
            amps[cut.join_index(n, m)] = c[(n, m)];
        }
    }
    StateVector::new(cut.num_qubits(), amps)
}

/// `|u⟩_A ⊗ |v⟩_B` from subsystem amplitudes.
pub fn product_state(u: &[C64], v: &[C64], cut: &BipartiteCut) -> Result<StateVector> {
    if u.len() != 1 << cut.n_a() || v.len() != 1 << cut.n_b() {
        return Err(dim("product factor lengths do not match the cut"));
    }
    let mut amps = vec![ZERO; 1 << cut.num_qubits()];
    for (m, vm) in v.iter().enumerate() {
        for (n, un) in u.iter().enumerate() {
            amps[cut.join_index(n, m)] = un * vm;
        }
    }
    StateVector::new(cut.num_qubits(), amps)
}

/// `|ψ⟩ = Σ_k values_k |left_k⟩ ⊗ |right_k⟩`, values non-increasing.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub values: Vec<f64>,
    /// Columns are the A-side vectors.
    pub left: ComplexMatrix,
    /// Columns are the B-side vectors.
    pub right: ComplexMatrix,
}

pub fn schmidt_decompose(state: &StateVector, cut: &BipartiteCut) -> Result<SchmidtDecomposition> {
    state.require_normalized()?;
    let c = coefficient_matrix(state, cut)?;
    let s = svd(&c)?;
    // C = X D Y† means the B-side vectors are the conjugated right singular vectors.
    Ok(SchmidtDecomposition { values: s.values, left: s.left, right: s.right.conjugate() })
}

/// Schmidt coefficients only.
pub fn schmidt_values(state: &StateVector, cut: &BipartiteCut) -> Result<Vec<f64>> {
    state.require_normalized()?;
    Ok(svd(&coefficient_matrix(state, cut)?)?.values)
}

/// Vectorizes `A = Σ γ_i G_i` on K qubits as `Σ γ_i (G_i ⊗ I)|Ω⟩` with
/// `|Ω⟩ = 2^{-K/2} Σ_n |n⟩|n⟩` on 2K qubits; the first register is qubits
/// `0..K`. The result is unnormalized with norm `‖A‖_F · 2^{-K/2}`.
pub fn vectorize_operator(terms: &[(C64, ComplexMatrix)]) -> Result<StateVector> {
    let first = terms.first().ok_or_else(|| invalid("vectorize_operator needs at least one term"))?;
    let size = first.1.rows();
    if !size.is_power_of_two() || size < 2 {
        return Err(dim(format!("operator dimension {size} is not a power of two")));
    }
    let k = size.trailing_zeros() as usize;
    if 2 * k > MAX_QUBITS {
        return Err(invalid(format!("{k}-qubit operator exceeds the dense cap")));
    }
    let targets: Vec<usize> = (0..k).collect();
    let omega_amp = C64::new((size as f64).powf(-0.5), 0.0);
    let mut omega = vec![ZERO; size * size];
    for n in 0..size {
        omega[n + size * n] = omega_amp;
    }
    let mut acc = vec![ZERO; size * size];
    for (gamma, g) in terms {
        if g.rows() != size || g.cols() != size {
            return Err(dim("all vectorized terms must act on the same number of qubits"));
        }
        g.check_unitary(UNITARY_TOL)?;
        let mut term = omega.clone();
        apply_in_place(&mut term, g.matrix(), &targets);
        acc.iter_mut().zip(&term).for_each(|(a, t)| *a += gamma * t);
    }
    StateVector::new(2 * k, acc)
}
