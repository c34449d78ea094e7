//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the library's factorizations: eigenvalues come from
//! cyclic Jacobi rotations, singular values from one-sided (Hestenes) Jacobi,
//! and Heisenberg energies from a bit-string matvec with power iteration.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Hermitian eigendecomposition by cyclic Jacobi. Values ascending.
pub fn jacobi_eigh(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let e = apq / mag;
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // J = [[cs, sn], [-sn·conj(e), cs·conj(e)]] on (p, q).
                let j = [
                    [C64::new(cs, 0.0), C64::new(sn, 0.0)],
                    [-e.conj() * sn, e.conj() * cs],
                ];
                for r in 0..n {
                    let (ap, aq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = ap * j[0][0] + aq * j[1][0];
                    a[(r, q)] = ap * j[0][1] + aq * j[1][1];
                    let (vp, vq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = vp * j[0][0] + vq * j[1][0];
                    v[(r, q)] = vp * j[0][1] + vq * j[1][1];
                }
                for c in 0..n {
                    let (ap, aq) = (a[(p, c)], a[(q, c)]);
                    a[(p, c)] = j[0][0].conj() * ap + j[1][0].conj() * aq;
                    a[(q, c)] = j[0][1].conj() * ap + j[1][1].conj() * aq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Singular values by one-sided Jacobi, non-increasing.
pub fn jacobi_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let a0 = if m.ncols() > m.nrows() { m.adjoint() } else { m.clone() };
    let (rows, n) = a0.shape();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a0.column(j).iter().copied().collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                let mag = gamma.norm();
                if mag <= 1e-16 * (alpha * beta).sqrt() || mag < 1e-300 {
                    continue;
                }
                rotated = true;
                let e = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                for r in 0..rows {
                    let (x, y) = (cols[i][r], cols[j][r]);
                    cols[i][r] = x * cs - y * e.conj() * sn;
                    cols[j][r] = x * sn + y * e.conj() * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.truncate(rows.min(n));
    values
}

/// `y = H x` for the isotropic spin-1/2 Heisenberg model on real amplitudes.
/// Bonds are qubit pairs with coupling J; basis bit 1 means spin down.
pub fn heisenberg_matvec(bonds: &[(usize, usize, f64)], x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (s, &xs) in x.iter().enumerate() {
        if xs == 0.0 {
            continue;
        }
        for &(i, j, coupling) in bonds {
            let bi = (s >> i) & 1;
            let bj = (s >> j) & 1;
            if bi == bj {
                y[s] += 0.25 * coupling * xs;
            } else {
                y[s] -= 0.25 * coupling * xs;
                y[s ^ (1 << i) ^ (1 << j)] += 0.5 * coupling * xs;
            }
        }
    }
}

/// Lowest eigenvalue of a real symmetric operator by power iteration on `shift·I − H`.
/// `start` should overlap the ground state; iteration stops when the Rayleigh
/// quotient moves less than `tol` over 50 steps.
pub fn power_ground_energy(
    matvec: impl Fn(&[f64], &mut [f64]),
    start: Vec<f64>,
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    let mut x = start;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut hx = vec![0.0; x.len()];
    let mut last = f64::INFINITY;
    let mut energy = f64::INFINITY;
    for it in 0..max_iter {
        matvec(&x, &mut hx);
        energy = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        if it % 50 == 0 {
            if (energy - last).abs() < tol {
                break;
            }
            last = energy;
        }
        for (xi, hi) in x.iter_mut().zip(&hx) {
            *xi = shift * *xi - hi;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    energy
}
