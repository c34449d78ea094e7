//! Dense complex linear algebra: SVD, Hermitian eigendecomposition and the
//! thresholded pseudo-inverse used for the orthogonality correction.
//!
//! Factorizations are delegated to `nalgebra`; this module fixes output
//! ordering (SVD non-increasing, eigh ascending) and validates inputs.

use std::fmt;
use std::ops::{Deref, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim, invalid, QsvdError, Result};

pub type C64 = Complex64;

/// Default threshold for the pseudo-inverse filter.
pub const DEFAULT_EPS: f64 = 1e-12;
/// Negative eigenvalues down to this magnitude are treated as roundoff.
pub const PSD_CLAMP: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{:?}", self.0)
    }
}

impl Deref for ComplexMatrix {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

fn first_non_finite(m: &DMatrix<C64>) -> Option<(usize, usize)> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Some((r, c));
            }
        }
    }
    None
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(dim(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, &data))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        match first_non_finite(&m) {
            Some((row, col)) => Err(QsvdError::NonFinite { row, col }),
            None => Ok(Self(m)),
        }
    }

    /// Wraps a matrix produced by internal arithmetic on finite inputs.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert!(first_non_finite(&m).is_none());
        Self(m)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(values[r], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.0.len());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest entry of |H − H†|; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of |G†G − I|; infinite for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        let g = self.0.adjoint() * &self.0;
        let mut worst: f64 = 0.0;
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((g[(r, c)] - target).norm());
            }
        }
        worst
    }

    /// Rejects matrices whose unitarity deviation exceeds `tol`.
    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev > tol {
            Err(QsvdError::NotUnitary(dev))
        } else {
            Ok(())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            data: self.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let data = repr.data.iter().map(|p| C64::new(p[0], p[1])).collect();
        ComplexMatrix::from_row_major(repr.rows, repr.cols, data).map_err(D::Error::custom)
    }
}

/// Thin SVD `A = left · diag(values) · right†`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left: ComplexMatrix,
    pub values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl SvdResult {
    /// Number of values above `1e-14 · values[0]`.
    pub fn rank(&self) -> usize {
        match self.values.first() {
            Some(&top) if top > 0.0 => self.values.iter().filter(|&&v| v > 1e-14 * top).count(),
            _ => 0,
        }
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.values.len();
        let mut scaled = self.left.0.clone();
        for j in 0..k {
            let s = self.values[j];
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        ComplexMatrix(scaled * self.right.0.adjoint())
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(dim("svd of an empty matrix"));
    }
    let (rows, cols) = a.shape();
    let dec = to_faer(a)
        .thin_svd()
        .map_err(|_| QsvdError::NoConvergence(format!("svd of {rows}x{cols} matrix")))?;
    let k = rows.min(cols);
    let left = DMatrix::from_fn(rows, k, |r, j| dec.U()[(r, j)]);
    let right = DMatrix::from_fn(cols, k, |r, j| dec.V()[(r, j)]);
    let values = (0..k).map(|j| dec.S()[j].re.max(0.0)).collect();
    Ok(SvdResult { left: ComplexMatrix::wrap(left), values, right: ComplexMatrix::wrap(right) })
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(dim("svd of an empty matrix"));
    }
    let (rows, cols) = a.shape();
    let mut values = to_faer(a)
        .singular_values()
        .map_err(|_| QsvdError::NoConvergence(format!("svd of {rows}x{cols} matrix")))?;
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(values)
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |r, c| a.0[(r, c)])
}

/// Hermitian eigendecomposition with eigenvalues ascending.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if h.rows() != h.cols() || h.is_empty() {
        return Err(dim(format!("eigh needs a non-empty square matrix, got {}x{}", h.rows(), h.cols())));
    }
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(QsvdError::NotHermitian(dev));
    }
    let n = h.rows();
    let sym = (&h.0 + h.0.adjoint()).scale(0.5);
    let dec = faer::Mat::from_fn(n, n, |r, c| sym[(r, c)])
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| QsvdError::NoConvergence(format!("eigh of {n}x{n} matrix")))?;
    let values = (0..n).map(|j| dec.S()[j].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, j| dec.U()[(r, j)]);
    Ok((values, ComplexMatrix::wrap(vectors)))
}

/// Eigendecomposition of a PSD matrix with the `τ_ε` filter applied.
#[derive(Clone, Debug)]
pub struct ThresholdedEigen {
    /// Eigenvalues ascending, roundoff negatives clamped to zero.
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
    /// `1/d` where `d > eps`, zero otherwise.
    pub inverse: Vec<f64>,
}

impl ThresholdedEigen {
    pub fn retained(&self) -> usize {
        self.inverse.iter().filter(|&&x| x > 0.0).count()
    }
}

pub fn thresholded_eigh(h: &ComplexMatrix, eps: f64) -> Result<ThresholdedEigen> {
    if !(eps > 0.0) {
        return Err(invalid(format!("pseudo-inverse threshold must be positive, got {eps}")));
    }
    let (mut values, vectors) = eigh(h)?;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_CLAMP {
                return Err(QsvdError::NotPsd(*v));
            }
            *v = 0.0;
        }
    }
    let inverse = values.iter().map(|&d| if d > eps { 1.0 / d } else { 0.0 }).collect();
    Ok(ThresholdedEigen { values, vectors, inverse })
}

/// `Σ_m τ_ε(d_m) v_m v_m†` with `τ_ε(x) = 1/x` for `x > ε`, else 0.
pub fn thresholded_pseudo_inverse(h: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix> {
    let te = thresholded_eigh(h, eps)?;
    let n = h.rows();
    let mut scaled = te.vectors.0.clone();
    for j in 0..n {
        let t = te.inverse[j];
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= t);
    }
    Ok(ComplexMatrix(scaled * te.vectors.0.adjoint()))
}

/// Matrix of i.i.d. standard complex Gaussians (unit variance per entry).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix(DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    }))
}

/// Haar-distributed unitary via QR of a complex Gaussian with the phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = complex_gaussian(n, n, rng).0.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    ComplexMatrix(q)
}

/// Completes the orthonormal columns of `iso` (rows ≥ cols) to a square unitary.
pub fn complete_unitary(iso: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, k) = iso.shape();
    if k > n {
        return Err(dim(format!("cannot complete {n}x{k} isometry")));
    }
    let mut cols: Vec<Vec<C64>> = (0..k).map(|j| iso.column(j).iter().copied().collect()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut cand = vec![ZERO; n];
        cand[e] = ONE;
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                cand.iter_mut().zip(c).for_each(|(x, a)| *x -= proj * a);
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cand.iter_mut().for_each(|z| *z /= norm);
            cols.push(cand);
        }
    }
    if cols.len() != n {
        return Err(QsvdError::NoConvergence("isometry completion".into()));
    }
    Ok(ComplexMatrix(DMatrix::from_fn(n, n, |r, c| cols[c][r])))
}
