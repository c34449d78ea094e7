//! Layered staircase circuits, reference weights and product-form trial states.

pub mod omega;

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, QsvdError, Result};
use crate::linalg::{haar_unitary, ComplexMatrix, C64, ONE, ZERO};
use crate::rng::seeded;
use crate::state::{apply_in_place, from_coefficient_matrix, BipartiteCut, StateVector, MAX_QUBITS, UNITARY_TOL};

/// A unitary on `targets`; `targets[0]` is the least significant bit of the gate index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub struct Gate {
    targets: Vec<usize>,
    matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    targets: Vec<usize>,
    /// Row-major `[re, im]` entries.
    entries: Vec<[f64; 2]>,
}

impl TryFrom<GateRepr> for Gate {
    type Error = QsvdError;
    fn try_from(r: GateRepr) -> Result<Self> {
        let size = 1usize << r.targets.len();
        let m = ComplexMatrix::from_row_major(size, size, r.entries.iter().map(|p| C64::new(p[0], p[1])).collect())?;
        Gate::new(r.targets, m)
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        GateRepr { targets: g.targets, entries: g.matrix.row_major().iter().map(|z| [z.re, z.im]).collect() }
    }
}

impl Gate {
    pub fn new(targets: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let size = 1usize << targets.len();
        if matrix.rows() != size || matrix.cols() != size {
            return Err(dim(format!("{}x{} gate on {} targets", matrix.rows(), matrix.cols(), targets.len())));
        }
        if (1..targets.len()).any(|i| targets[..i].contains(&targets[i])) {
            return Err(invalid(format!("repeated gate targets {targets:?}")));
        }
        matrix.check_unitary(UNITARY_TOL)?;
        Ok(Self { targets, matrix })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub(crate) fn set_matrix(&mut self, m: ComplexMatrix) {
        debug_assert_eq!(m.rows(), self.matrix.rows());
        self.matrix = m;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateInit {
    #[default]
    Haar,
    Identity,
}

/// `layers` repetitions of a staircase of `gate_size`-qubit gates on
/// qubits `(i, …, i+gate_size−1)` for `i = 0, …, n−gate_size`. Registers
/// smaller than the gate size get one gate on all qubits per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    num_qubits: usize,
    layers: usize,
    gate_size: usize,
    layout: String,
    init: GateInit,
    seed: Option<u64>,
    gates: Vec<Gate>,
}

/// Two-qubit staircase with Haar-random gates.
pub fn build_layered(num_qubits: usize, layers: usize, seed: u64) -> Result<LayeredCircuit> {
    if num_qubits < 2 {
        return Err(invalid("layered circuits need at least two qubits"));
    }
    LayeredCircuit::new(num_qubits, layers, 2, GateInit::Haar, seed)
}

impl LayeredCircuit {
    pub fn new(num_qubits: usize, layers: usize, gate_size: usize, init: GateInit, seed: u64) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(invalid(format!("circuit on {num_qubits} qubits")));
        }
        if layers == 0 || gate_size == 0 {
            return Err(invalid("layers and gate size must be positive"));
        }
        let g = gate_size.min(num_qubits);
        let mut rng = seeded(seed);
        let mut gates = Vec::with_capacity(layers * (num_qubits - g + 1));
        for _ in 0..layers {
            for i in 0..=(num_qubits - g) {
                let m = match init {
                    GateInit::Haar => haar_unitary(1 << g, &mut rng),
                    GateInit::Identity => ComplexMatrix::identity(1 << g),
                };
                gates.push(Gate { targets: (i..i + g).collect(), matrix: m });
            }
        }
        Ok(Self {
            num_qubits,
            layers,
            gate_size: g,
            layout: "staircase".into(),
            init,
            seed: (init == GateInit::Haar).then_some(seed),
            gates,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn gate_size(&self) -> usize {
        self.gate_size
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Replaces gate `index`, checking shape and unitarity.
    pub fn set_gate(&mut self, index: usize, matrix: ComplexMatrix) -> Result<()> {
        let gate = self.gates.get_mut(index).ok_or_else(|| invalid(format!("gate index {index} out of range")))?;
        *gate = Gate::new(gate.targets.clone(), matrix)?;
        Ok(())
    }

    pub(crate) fn gate_mut(&mut self, index: usize) -> &mut Gate {
        &mut self.gates[index]
    }

    /// `amps ← U amps`.
    pub fn apply(&self, amps: &mut [C64]) {
        debug_assert_eq!(amps.len(), 1 << self.num_qubits);
        for g in &self.gates {
            apply_in_place(amps, g.matrix.matrix(), &g.targets);
        }
    }

    /// `amps ← U† amps`.
    pub fn apply_adjoint(&self, amps: &mut [C64]) {
        for g in self.gates.iter().rev() {
            apply_in_place(amps, &g.matrix.matrix().adjoint(), &g.targets);
        }
    }

    /// `U|k⟩`.
    pub fn column(&self, k: usize) -> Vec<C64> {
        let mut amps = vec![ZERO; 1 << self.num_qubits];
        amps[k] = ONE;
        self.apply(&mut amps);
        amps
    }

    /// `U|k⟩` for `k < count`, as a `2^n × count` matrix.
    pub fn columns(&self, count: usize) -> ComplexMatrix {
        let d = 1usize << self.num_qubits;
        let mut m = ComplexMatrix::zeros(d, count).into_inner();
        for k in 0..count {
            m.column_mut(k).copy_from_slice(&self.column(k));
        }
        ComplexMatrix::wrap(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: LayeredCircuit = serde_json::from_str(text)?;
        if c.gates.iter().any(|g| g.targets.iter().any(|&t| t >= c.num_qubits)) {
            return Err(invalid("gate target outside the circuit register"));
        }
        Ok(c)
    }
}

/// Fixed weights `w_n ∝ p^{n−1}` up to the cutoff, zero beyond, `Σ w² = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceWeights {
    pub weights: Vec<f64>,
    pub decay: f64,
    pub cutoff: Option<usize>,
}

impl ReferenceWeights {
    /// Number of nonzero leading weights.
    pub fn support(&self) -> usize {
        self.cutoff.unwrap_or(self.weights.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn reference_weights(p: f64, d: usize, cutoff: Option<usize>) -> Result<ReferenceWeights> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("weight decay must lie in (0, 1], got {p}")));
    }
    if d == 0 {
        return Err(invalid("weight count must be positive"));
    }
    let c = cutoff.unwrap_or(d);
    if c == 0 || c > d {
        return Err(invalid(format!("cutoff {c} outside 1..={d}")));
    }
    let mut w: Vec<f64> = (0..d).map(|n| if n < c { p.powi(n as i32) } else { 0.0 }).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    Ok(ReferenceWeights { weights: w, decay: p, cutoff })
}

/// `Σ_k w_k (U|k⟩) ⊗ (V|k⟩)`.
pub fn trial_state(u: &LayeredCircuit, v: &LayeredCircuit, w: &ReferenceWeights, cut: &BipartiteCut) -> Result<StateVector> {
    if u.num_qubits != cut.n_a() || v.num_qubits != cut.n_b() {
        return Err(dim(format!(
            "circuits on {}|{} qubits for a {}|{} cut",
            u.num_qubits,
            v.num_qubits,
            cut.n_a(),
            cut.n_b()
        )));
    }
    let max = 1usize << cut.n_a().min(cut.n_b());
    if w.len() > max {
        return Err(dim(format!("{} weights exceed the {max} available Schmidt slots", w.len())));
    }
    let (da, db) = (1usize << cut.n_a(), 1usize << cut.n_b());
    let mut coef = ComplexMatrix::zeros(da, db).into_inner();
    for (k, &wk) in w.weights.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let uk = u.column(k);
        let vk = v.column(k);
        for m in 0..db {
            let vm = vk[m] * wk;
            for n in 0..da {
                coef[(n, m)] += uk[n] * vm;
            }
        }
    }
    from_coefficient_matrix(&ComplexMatrix::wrap(coef), cut)
}
