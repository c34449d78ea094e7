//! Spin-1/2 Heisenberg Hamiltonians on chains, square lattices and two-leg
//! ladders, stored as CSR matrices, plus a Lanczos ground-state solver.
//!
//! Basis convention: bit 0 of a qubit is spin up, bit 1 is spin down.
//! Site numbering: chain `n`; square `x + lx·y`; ladder `leg + 2·rung`.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, QsvdError, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::rng::seeded;
use crate::state::{inner, BipartiteCut, StateVector, MAX_QUBITS};

const HERMITIAN_TOL: f64 = 1e-12;
const DENSE_CAP: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Chain { length: usize },
    Square { lx: usize, ly: usize },
    Ladder { length: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    TwistedPeriodic,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    /// `J` for chain and square, `J_∥` along ladder legs.
    #[serde(default = "unit")]
    pub coupling: f64,
    /// `J_⊥` on ladder rungs.
    #[serde(default)]
    pub rung_coupling: f64,
    /// Twist angle of the leg boundary bonds, radians.
    #[serde(default)]
    pub twist: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Qubit index of each site; the geometry's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_to_qubit: Option<Vec<usize>>,
}

/// `J [S^z_a S^z_b + ½(e^{-iφ} S⁺_a S⁻_b + e^{iφ} S⁻_a S⁺_b)]` on qubits `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub coupling: f64,
    pub phase: f64,
}

impl LatticeSpec {
    pub fn chain(length: usize, coupling: f64) -> Self {
        Self {
            geometry: Geometry::Chain { length },
            coupling,
            rung_coupling: 0.0,
            twist: 0.0,
            boundary: Boundary::Open,
            site_to_qubit: None,
        }
    }

    pub fn square(lx: usize, ly: usize, coupling: f64) -> Self {
        Self { geometry: Geometry::Square { lx, ly }, ..Self::chain(0, coupling) }
    }

    /// Ladder with twisted-periodic legs.
    pub fn ladder(length: usize, leg_coupling: f64, rung_coupling: f64, twist: f64) -> Self {
        Self {
            geometry: Geometry::Ladder { length },
            coupling: leg_coupling,
            rung_coupling,
            twist,
            boundary: Boundary::TwistedPeriodic,
            site_to_qubit: None,
        }
    }

    pub fn num_sites(&self) -> usize {
        match self.geometry {
            Geometry::Chain { length } => length,
            Geometry::Square { lx, ly } => lx * ly,
            Geometry::Ladder { length } => 2 * length,
        }
    }

    /// Default mapping: identity for chain and ladder, row-major snake for square.
    pub fn default_mapping(&self) -> Vec<usize> {
        match self.geometry {
            Geometry::Square { lx, ly } => {
                let mut map = vec![0; lx * ly];
                for y in 0..ly {
                    for x in 0..lx {
                        let col = if y % 2 == 0 { x } else { lx - 1 - x };
                        map[x + lx * y] = y * lx + col;
                    }
                }
                map
            }
            _ => (0..self.num_sites()).collect(),
        }
    }

    pub fn mapping(&self) -> Vec<usize> {
        self.site_to_qubit.clone().unwrap_or_else(|| self.default_mapping())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_sites();
        let min_sites = match self.geometry {
            Geometry::Chain { .. } => 2,
            Geometry::Square { lx, ly } => {
                if lx == 0 || ly == 0 {
                    return Err(invalid("square lattice sizes must be positive"));
                }
                2
            }
            Geometry::Ladder { .. } => 4,
        };
        if n < min_sites {
            return Err(invalid(format!("lattice has {n} sites, need at least {min_sites}")));
        }
        if n > MAX_QUBITS {
            return Err(invalid(format!("{n} sites exceeds the dense cap of {MAX_QUBITS}")));
        }
        if ![self.coupling, self.rung_coupling, self.twist].iter().all(|v| v.is_finite()) {
            return Err(invalid("couplings and twist must be finite"));
        }
        let is_ladder = matches!(self.geometry, Geometry::Ladder { .. });
        if !is_ladder {
            if self.boundary != Boundary::Open {
                return Err(invalid("only the ladder supports twisted-periodic boundaries"));
            }
            if self.twist != 0.0 {
                return Err(invalid("twist is only allowed for the ladder"));
            }
            if self.rung_coupling != 0.0 {
                return Err(invalid("rung_coupling is only meaningful for the ladder"));
            }
        } else if self.boundary == Boundary::Open && self.twist != 0.0 {
            return Err(invalid("twist requires twisted_periodic boundary"));
        }
        let map = self.mapping();
        if map.len() != n {
            return Err(invalid(format!("site_to_qubit has {} entries for {n} sites", map.len())));
        }
        let mut seen = vec![false; n];
        for &q in &map {
            if q >= n || seen[q] {
                return Err(invalid(format!("site_to_qubit {map:?} is not a bijection onto 0..{n}")));
            }
            seen[q] = true;
        }
        Ok(())
    }

    /// Bonds in qubit labels.
    pub fn bonds(&self) -> Result<Vec<Bond>> {
        self.validate()?;
        let map = self.mapping();
        let j = self.coupling;
        let mut sites: Vec<(usize, usize, f64, f64)> = Vec::new();
        match self.geometry {
            Geometry::Chain { length } => {
                sites.extend((0..length - 1).map(|n| (n, n + 1, j, 0.0)));
            }
            Geometry::Square { lx, ly } => {
                for y in 0..ly {
                    for x in 0..lx {
                        let s = x + lx * y;
                        if x + 1 < lx {
                            sites.push((s, s + 1, j, 0.0));
                        }
                        if y + 1 < ly {
                            sites.push((s, s + lx, j, 0.0));
                        }
                    }
                }
            }
            Geometry::Ladder { length } => {
                let site = |leg: usize, rung: usize| leg + 2 * rung;
                for leg in 0..2 {
                    for rung in 0..length - 1 {
                        sites.push((site(leg, rung), site(leg, rung + 1), j, 0.0));
                    }
                    if self.boundary == Boundary::TwistedPeriodic {
                        sites.push((site(leg, length - 1), site(leg, 0), j, self.twist));
                    }
                }
                sites.extend((0..length).map(|rung| (site(0, rung), site(1, rung), self.rung_coupling, 0.0)));
            }
        }
        Ok(sites
            .into_iter()
            .filter(|s| s.2 != 0.0)
            .map(|(a, b, coupling, phase)| Bond { a: map[a], b: map[b], coupling, phase })
            .collect())
    }

    /// A = the first half of the sites (chain prefix, lower rows in snake
    /// order, first rungs), in qubit labels.
    pub fn default_cut(&self) -> Result<BipartiteCut> {
        self.validate()?;
        let map = self.mapping();
        let n = self.num_sites();
        let half_sites: Vec<usize> = match self.geometry {
            Geometry::Square { .. } => {
                let snake = self.default_mapping();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&s| snake[s]);
                order.truncate(n / 2);
                order
            }
            _ => (0..n / 2).collect(),
        };
        let mut a: Vec<usize> = half_sites.iter().map(|&s| map[s]).collect();
        a.sort_unstable();
        BipartiteCut::from_subsystem_a(n, a)
    }
}

/// Hermitian operator in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Sums duplicate entries, drops zeros and checks Hermiticity.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(t) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(dim_err(t.0.max(t.1), dim));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| v.norm() != 0.0).collect();
        let mut k = 0;
        let (mut c2, mut v2) = (Vec::new(), Vec::new());
        for (i, &kept) in keep.iter().enumerate() {
            if kept {
                row_ptr[rows_of[i] + 1] += 1;
                c2.push(cols[i]);
                v2.push(values[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, c2.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = Self { dim, row_ptr, cols: c2, values: v2 };
        let dev = op.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(QsvdError::NotHermitian(dev));
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => ZERO,
        }
    }

    fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                worst = worst.max((self.values[k] - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k])))
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(dim(format!("operator of dimension {} applied to length {}", self.dim, x.len())));
        }
        let mut y = vec![ZERO; self.dim];
        self.matvec(x, &mut y);
        Ok(y)
    }

    /// `⟨x|H|x⟩`.
    pub fn expectation(&self, x: &StateVector) -> Result<C64> {
        Ok(inner(x.amplitudes(), &self.apply(x.amplitudes())?))
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        if self.dim > DENSE_CAP {
            return Err(invalid(format!("dense copy of dimension {} exceeds {DENSE_CAP}", self.dim)));
        }
        let mut m = ComplexMatrix::zeros(self.dim, self.dim).into_inner();
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        ComplexMatrix::from_matrix(m)
    }

    /// Largest entry of `[H, Σ S^z]`.
    pub fn total_sz_commutator(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| v.norm() * (r.count_ones() as f64 - c.count_ones() as f64).abs() * 0.5)
            .fold(0.0, f64::max)
    }

    /// Restriction to the span of `basis` (sorted global indices). Entries
    /// leaving the span are rejected.
    pub fn restrict(&self, basis: &[usize]) -> Result<SparseOperator> {
        let mut local = vec![usize::MAX; self.dim];
        for (i, &g) in basis.iter().enumerate() {
            local[g] = i;
        }
        let mut trip = Vec::new();
        for (i, &g) in basis.iter().enumerate() {
            for k in self.row_ptr[g]..self.row_ptr[g + 1] {
                let l = local[self.cols[k]];
                if l == usize::MAX {
                    return Err(invalid("operator does not preserve the requested sector"));
                }
                trip.push((i, l, self.values[k]));
            }
        }
        SparseOperator::from_triplets(basis.len(), trip)
    }
}

fn dim_err(index: usize, dim: usize) -> QsvdError {
    QsvdError::Dimension(format!("entry index {index} outside dimension {dim}"))
}

pub fn build_hamiltonian(spec: &LatticeSpec) -> Result<SparseOperator> {
    let bonds = spec.bonds()?;
    let n = spec.num_sites();
    let dimension = 1usize << n;
    let mut trip = Vec::with_capacity(dimension * (bonds.len() + 1));
    for s in 0..dimension {
        let mut diag = 0.0;
        for bond in &bonds {
            let (ba, bb) = ((s >> bond.a) & 1, (s >> bond.b) & 1);
            if ba == bb {
                diag += 0.25 * bond.coupling;
            } else {
                diag -= 0.25 * bond.coupling;
                let t = s ^ (1 << bond.a) ^ (1 << bond.b);
                // S⁺_a S⁻_b maps (a down, b up) to (a up, b down).
                let phase = if ba == 1 { -bond.phase } else { bond.phase };
                trip.push((t, s, C64::from_polar(0.5 * bond.coupling, phase)));
            }
        }
        if diag != 0.0 {
            trip.push((s, s, C64::new(diag, 0.0)));
        }
    }
    SparseOperator::from_triplets(dimension, trip)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Total `S^z = 0` when the operator conserves it and the qubit count is even.
    Auto,
    Full,
    /// Basis states with this many spins down.
    SpinsDown(usize),
}

#[derive(Clone, Debug)]
pub struct GroundStateOptions {
    pub tol: f64,
    pub seed: u64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub sector: Sector,
    /// Also estimate the first excited level within the sector.
    pub compute_gap: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, seed: 0, krylov_dim: 200, max_restarts: 100, sector: Sector::Auto, compute_gap: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub energy: f64,
    #[serde(skip)]
    pub state: StateVector,
    pub residual: f64,
    pub first_excited: Option<f64>,
    /// First excited gap below `1e-10`.
    pub degenerate: bool,
    /// Spins-down count of the sector searched, `None` for the full space.
    pub sector: Option<usize>,
}

pub fn ground_state(h: &SparseOperator, tol: f64, seed: u64) -> Result<GroundState> {
    ground_state_with(h, &GroundStateOptions { tol, seed, ..Default::default() })
}

pub fn ground_state_with(h: &SparseOperator, opts: &GroundStateOptions) -> Result<GroundState> {
    if !h.dim.is_power_of_two() {
        return Err(dim(format!("operator dimension {} is not a power of two", h.dim)));
    }
    let n = h.dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(invalid(format!("{n} qubits exceeds the dense cap of {MAX_QUBITS}")));
    }
    if !(opts.tol > 0.0) || opts.krylov_dim < 2 {
        return Err(invalid("ground-state tolerance must be positive and krylov_dim ≥ 2"));
    }
    let conserves = h.total_sz_commutator() <= HERMITIAN_TOL;
    let down = match opts.sector {
        Sector::Full => None,
        Sector::Auto => (conserves && n % 2 == 0).then_some(n / 2),
        Sector::SpinsDown(k) => {
            if !conserves {
                return Err(invalid("operator does not conserve total S^z"));
            }
            if k > n {
                return Err(invalid(format!("sector with {k} spins down on {n} qubits")));
            }
            Some(k)
        }
    };
    let (basis, op) = match down {
        Some(k) => {
            let basis: Vec<usize> = (0..h.dim).filter(|s| s.count_ones() as usize == k).collect();
            let op = h.restrict(&basis)?;
            (Some(basis), op)
        }
        None => (None, h.clone()),
    };
    let scale = h.norm_bound().max(f64::MIN_POSITIVE);
    let threshold = opts.tol * scale;
    let mut rng = seeded(opts.seed);
    let ground = lanczos_lowest(&op, &[], threshold, opts, &mut rng)?;
    let first_excited = if opts.compute_gap && op.dim > 1 {
        Some(lanczos_lowest(&op, &[&ground.1], threshold, opts, &mut rng)?.0)
    } else {
        None
    };
    let mut amps = vec![ZERO; h.dim];
    match &basis {
        Some(b) => b.iter().zip(&ground.1).for_each(|(&g, v)| amps[g] = *v),
        None => amps.copy_from_slice(&ground.1),
    }
    let state = StateVector::new(n, amps)?.normalize()?;
    Ok(GroundState {
        energy: ground.0,
        state,
        residual: ground.2,
        first_excited,
        degenerate: first_excited.is_some_and(|e1| e1 - ground.0 < 1e-10),
        sector: down,
    })
}

fn project_out(w: &mut [C64], basis: &[Vec<C64>]) {
    for q in basis {
        let p = inner(q, w);
        w.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
    }
}

fn project_out_refs(w: &mut [C64], basis: &[&Vec<C64>]) {
    for q in basis {
        let p = inner(q, w);
        w.iter_mut().zip(q.iter()).for_each(|(x, y)| *x -= p * y);
    }
}

fn normalize_vec(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

/// Restarted Lanczos with full reorthogonalization for the lowest eigenpair
/// orthogonal to `deflate`. Returns (value, vector, residual).
fn lanczos_lowest(
    op: &SparseOperator,
    deflate: &[&Vec<C64>],
    threshold: f64,
    opts: &GroundStateOptions,
    rng: &mut crate::rng::SeededRng,
) -> Result<(f64, Vec<C64>, f64)> {
    use rand_distr::{Distribution, StandardNormal};
    let dimension = op.dim;
    let scale = op.norm_bound().max(f64::MIN_POSITIVE);
    let mut v: Vec<C64> = (0..dimension)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    project_out_refs(&mut v, deflate);
    if normalize_vec(&mut v) == 0.0 {
        return Err(QsvdError::NoConvergence("lanczos start vector vanished".into()));
    }
    let m = opts.krylov_dim.min(dimension - deflate.len()).max(1);
    let mut residual = f64::INFINITY;
    let mut w = vec![ZERO; dimension];
    for _restart in 0..opts.max_restarts.max(1) {
        let mut q: Vec<Vec<C64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            op.matvec(&q[j], &mut w);
            let a = inner(&q[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                project_out_refs(&mut w, deflate);
                project_out(&mut w, &q);
            }
            let b = normalize_vec(&mut w);
            // An invariant Krylov space makes the Ritz values exact.
            if j + 1 == m || b < 1e-10 * scale {
                break;
            }
            beta.push(b);
            q.push(w.clone());
        }
        let k = alpha.len();
        let t = nalgebra::DMatrix::<f64>::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::try_new(t, f64::EPSILON, 10_000)
            .ok_or_else(|| QsvdError::NoConvergence("tridiagonal eigensolver".into()))?;
        let lowest = (0..k).min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap();
        let mut y = vec![ZERO; dimension];
        for (i, qi) in q.iter().take(k).enumerate() {
            let coef = eig.eigenvectors[(i, lowest)];
            y.iter_mut().zip(qi).for_each(|(a, b)| *a += b * coef);
        }
        project_out_refs(&mut y, deflate);
        normalize_vec(&mut y);
        op.matvec(&y, &mut w);
        let energy = inner(&y, &w).re;
        residual = w.iter().zip(&y).map(|(hy, yy)| (hy - yy * energy).norm_sqr()).sum::<f64>().sqrt();
        if residual <= threshold {
            return Ok((energy, y, residual));
        }
        v = y;
    }
    Err(QsvdError::NoConvergence(format!("lanczos residual {residual:e} above {threshold:e}")))
}
