use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::LayeredCircuit;
use crate::error::{dim, invalid, Result};
use crate::linalg::{singular_values, thresholded_eigh, thresholded_pseudo_inverse, ComplexMatrix, C64};
use crate::state::{coefficient_matrix, BipartiteCut, StateVector, NORM_TOL};
use crate::sweep::BipartiteObjective;

use super::{optimize_pair, sort_descending, Method, MethodConfig, SpectrumMetadata, SpectrumResult};

/// Residual norm below which deflation stops early.
pub const EARLY_STOP_NORM: f64 = 1e-14;

/// Extracted product states with their overlap and cross matrices:
/// `A_kl = ⟨u_k|u_l⟩`, `B_kl = ⟨v_k|v_l⟩`, `X_kl = ⟨u_k, v_l|Φ⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeflationLedger {
    eps: f64,
    u_states: Vec<Vec<C64>>,
    v_states: Vec<Vec<C64>>,
    a: ComplexMatrix,
    b: ComplexMatrix,
    cross: ComplexMatrix,
    circuits: Vec<Option<(LayeredCircuit, LayeredCircuit)>>,
}

fn grow(m: &ComplexMatrix, mut entry: impl FnMut(usize, usize) -> C64) -> ComplexMatrix {
    let n = m.rows();
    ComplexMatrix::wrap(DMatrix::from_fn(n + 1, n + 1, |r, c| if r < n && c < n { m[(r, c)] } else { entry(r, c) }))
}

impl DeflationLedger {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("pseudo-inverse threshold must be positive, got {eps}")));
        }
        let empty = ComplexMatrix::zeros(0, 0);
        Ok(Self {
            eps,
            u_states: Vec::new(),
            v_states: Vec::new(),
            a: empty.clone(),
            b: empty.clone(),
            cross: empty,
            circuits: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.u_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_states.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn overlaps_a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn overlaps_b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn cross(&self) -> &ComplexMatrix {
        &self.cross
    }

    pub fn u_state(&self, k: usize) -> &[C64] {
        &self.u_states[k]
    }

    pub fn v_state(&self, k: usize) -> &[C64] {
        &self.v_states[k]
    }

    pub fn circuits(&self, k: usize) -> Option<&(LayeredCircuit, LayeredCircuit)> {
        self.circuits.get(k).and_then(|c| c.as_ref())
    }

    /// Appends normalized states `|u⟩`, `|v⟩` for a target with coefficient
    /// matrix `coef`.
    pub fn push_states(&mut self, u: Vec<C64>, v: Vec<C64>, coef: &ComplexMatrix) -> Result<()> {
        if u.len() != coef.rows() || v.len() != coef.cols() {
            return Err(dim(format!("states of length {}|{} for a {}x{} target", u.len(), v.len(), coef.rows(), coef.cols())));
        }
        for s in [&u, &v] {
            let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(crate::QsvdError::NotNormalized(norm));
            }
        }
        let n = self.len();
        let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<C64>();
        let cross_entry = |uk: &[C64], vl: &[C64]| -> C64 {
            // ⟨u|⊗⟨v| Φ = u† C conj(v)
            let vc = DVector::from_iterator(vl.len(), vl.iter().map(|z| z.conj()));
            let cv = coef.matrix() * vc;
            uk.iter().zip(cv.iter()).map(|(a, b)| a.conj() * b).sum()
        };
        let a = grow(&self.a, |r, c| match (r == n, c == n) {
            (true, true) => dot(&u, &u),
            (true, false) => dot(&u, &self.u_states[c]),
            _ => dot(&self.u_states[r], &u),
        });
        let b = grow(&self.b, |r, c| match (r == n, c == n) {
            (true, true) => dot(&v, &v),
            (true, false) => dot(&v, &self.v_states[c]),
            _ => dot(&self.v_states[r], &v),
        });
        let x = grow(&self.cross, |r, c| {
            let uk = if r == n { &u } else { &self.u_states[r] };
            let vl = if c == n { &v } else { &self.v_states[c] };
            cross_entry(uk, vl)
        });
        self.a = a;
        self.b = b;
        self.cross = x;
        self.u_states.push(u);
        self.v_states.push(v);
        self.circuits.push(None);
        Ok(())
    }

    /// Appends `U|0⟩`, `V|0⟩` and keeps the circuits.
    pub fn push_circuits(&mut self, u: LayeredCircuit, v: LayeredCircuit, coef: &ComplexMatrix) -> Result<()> {
        self.push_states(u.column(0), v.column(0), coef)?;
        *self.circuits.last_mut().unwrap() = Some((u, v));
        Ok(())
    }

    /// `(A⁺, B⁺)` with eigenvalues below `eps` discarded.
    pub fn pseudo_inverses(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        Ok((thresholded_pseudo_inverse(&self.a, self.eps)?, thresholded_pseudo_inverse(&self.b, self.eps)?))
    }

    /// Coefficients `A⁺ X B⁺ᵀ` of `P|Φ⟩` in the product basis `|u_k, v_l⟩`.
    fn projected_weights(&self) -> Result<DMatrix<C64>> {
        let (ap, bp) = self.pseudo_inverses()?;
        Ok(ap.matrix() * self.cross.matrix() * bp.matrix().transpose())
    }

    fn state_columns(states: &[Vec<C64>]) -> DMatrix<C64> {
        let d = states.first().map_or(0, |s| s.len());
        DMatrix::from_fn(d, states.len(), |r, c| states[c][r])
    }

    /// Coefficient matrix of `(P^A ⊗ P^B)|Φ⟩`.
    pub fn projected_coefficients(&self) -> Result<ComplexMatrix> {
        if self.is_empty() {
            return Err(invalid("empty ledger"));
        }
        let m = self.projected_weights()?;
        let uc = Self::state_columns(&self.u_states);
        let vc = Self::state_columns(&self.v_states);
        Ok(ComplexMatrix::wrap(uc * m * vc.transpose()))
    }

    /// `⟨u, v|(I − P^A ⊗ P^B)|Φ⟩`.
    pub fn deflated_overlap(&self, u: &[C64], v: &[C64], coef: &ComplexMatrix) -> Result<C64> {
        let vc = DVector::from_iterator(v.len(), v.iter().map(|z| z.conj()));
        let direct: C64 = u.iter().zip((coef.matrix() * &vc).iter()).map(|(a, b)| a.conj() * b).sum();
        if self.is_empty() {
            return Ok(direct);
        }
        let m = self.projected_weights()?;
        let ou: DVector<C64> = DVector::from_iterator(self.len(), self.u_states.iter().map(|s| u.iter().zip(s).map(|(a, b)| a.conj() * b).sum()));
        let ov: DVector<C64> = DVector::from_iterator(self.len(), self.v_states.iter().map(|s| v.iter().zip(s).map(|(a, b)| a.conj() * b).sum()));
        let projected = (ou.transpose() * m * ov)[(0, 0)];
        Ok(direct - projected)
    }
}

/// `Σ_kl = τ(d^A_k)^{1/2} τ(d^B_l)^{1/2} (U_A† X conj(U_B))_kl` from the
/// thresholded eigendecompositions `A = U_A D_A U_A†`, `B = U_B D_B U_B†`.
/// Its singular values are the Schmidt values of `P|Φ⟩`.
pub fn core_matrix(ledger: &DeflationLedger) -> Result<ComplexMatrix> {
    if ledger.is_empty() {
        return Err(invalid("empty ledger"));
    }
    let ea = thresholded_eigh(&ledger.a, ledger.eps)?;
    let eb = thresholded_eigh(&ledger.b, ledger.eps)?;
    let mut core = ea.vectors.matrix().adjoint() * ledger.cross.matrix() * eb.vectors.matrix().conjugate();
    for (k, t) in ea.inverse.iter().enumerate() {
        core.row_mut(k).iter_mut().for_each(|z| *z *= t.sqrt());
    }
    for (l, t) in eb.inverse.iter().enumerate() {
        core.column_mut(l).iter_mut().for_each(|z| *z *= t.sqrt());
    }
    Ok(ComplexMatrix::wrap(core))
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(invalid("deflation needs at least one step"));
    }
    Ok(())
}

fn normalized(residual: &ComplexMatrix) -> Option<ComplexMatrix> {
    let norm = residual.frobenius_norm();
    (norm >= EARLY_STOP_NORM).then(|| ComplexMatrix::wrap(residual.matrix().unscale(norm)))
}

/// Sequential extraction against the naive projector `I − Σ |u_m, v_m⟩⟨u_m, v_m|`.
/// Each estimate is the positive part of `Re⟨u_n, v_n|Φ⟩`.
pub fn simple_deflation(target: &StateVector, cut: &BipartiteCut, steps: usize, config: &MethodConfig) -> Result<(SpectrumResult, DeflationLedger)> {
    check_steps(steps)?;
    config.validate()?;
    let coef = coefficient_matrix(target, cut)?;
    let mut ledger = DeflationLedger::new(crate::linalg::DEFAULT_EPS)?;
    let mut meta = SpectrumMetadata::from_config(config);
    let mut residual = coef.clone();
    let mut values = Vec::new();
    for n in 0..steps {
        let Some(goal) = normalized(&residual) else {
            meta.notes.push(format!("residual exhausted after {n} steps"));
            break;
        };
        let objective = BipartiteObjective::from_coefficients(goal, &[1.0])?;
        let pair = optimize_pair(&objective, cut.n_a(), cut.n_b(), config, n as u64)?;
        meta.runs.push(pair.info);
        ledger.push_circuits(pair.u, pair.v, &coef)?;
        let raw = ledger.cross[(n, n)];
        meta.raw_overlaps.push(raw);
        values.push(raw.re.max(0.0));
        meta.history.push(values.clone());
        let (u, v) = (ledger.u_state(n), ledger.v_state(n));
        let mut r = residual.into_inner();
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                r[(i, j)] -= raw * ui * vj;
            }
        }
        residual = ComplexMatrix::wrap(r);
    }
    meta.steps = Some(ledger.len());
    let result = SpectrumResult::new(Method::Simple, values.into_iter().map(Some).collect(), meta);
    Ok((result, ledger))
}

/// Sequential extraction against `I − P^A ⊗ P^B` built from thresholded
/// pseudo-inverses of the overlap matrices. The spectrum is the sorted set
/// of singular values of the core matrix.
pub fn improved_deflation(
    target: &StateVector,
    cut: &BipartiteCut,
    steps: usize,
    eps: f64,
    config: &MethodConfig,
) -> Result<(SpectrumResult, DeflationLedger)> {
    check_steps(steps)?;
    config.validate()?;
    let coef = coefficient_matrix(target, cut)?;
    let mut ledger = DeflationLedger::new(eps)?;
    let mut meta = SpectrumMetadata::from_config(config);
    let mut values = Vec::new();
    for n in 0..steps {
        let residual = if ledger.is_empty() {
            coef.clone()
        } else {
            ComplexMatrix::wrap(coef.matrix() - ledger.projected_coefficients()?.matrix())
        };
        let Some(goal) = normalized(&residual) else {
            meta.notes.push(format!("residual exhausted after {n} steps"));
            break;
        };
        let objective = BipartiteObjective::from_coefficients(goal, &[1.0])?;
        let pair = optimize_pair(&objective, cut.n_a(), cut.n_b(), config, n as u64)?;
        meta.runs.push(pair.info);
        ledger.push_circuits(pair.u, pair.v, &coef)?;
        meta.raw_overlaps.push(ledger.cross[(n, n)]);
        values = singular_values(&core_matrix(&ledger)?)?;
        sort_descending(&mut values);
        meta.history.push(values.clone());
    }
    meta.steps = Some(ledger.len());
    let result = SpectrumResult::new(Method::Improved, values.into_iter().map(Some).collect(), meta);
    Ok((result, ledger))
}
