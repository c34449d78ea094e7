//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `QSVD_ACCEPTANCE_SWEEP_SCALE` multiplies every sweep cap (default 1).
//! `QSVD_ACCEPTANCE_ONLY=1,5,7` restricts the run to the listed criteria.

#[path = "common/oracle.rs"]
mod oracle;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use qsvd_core::analysis::{error_propagation_study, geometric_spectrum};
use qsvd_core::ansatz::omega::{
    fit_weight_state, omega_cutoff_core, omega_exponential, omega_hann_weights, rotation_product_state, truncated_exponential_weights,
    weight_state,
};
use qsvd_core::ansatz::{reference_weights, GateInit, LayeredCircuit};
use qsvd_core::hamiltonian::{build_hamiltonian, ground_state, LatticeSpec};
use qsvd_core::linalg::haar_unitary;
use qsvd_core::measurement::interferometric_probs;
use qsvd_core::methods::{core_matrix, full_svd, improved_deflation, simple_deflation, DeflationLedger, MethodConfig};
use qsvd_core::mps::{mps_to_unitaries, state_to_mps, verify_canonical};
use qsvd_core::rng::seeded;
use qsvd_core::state::{coefficient_matrix, schmidt_values, vectorize_operator};
use qsvd_core::sweep::{sweep_optimize, BipartiteObjective, SweepConfig};
use qsvd_core::{BipartiteCut, ComplexMatrix, StateVector, C64};

type Check = Result<(bool, String), String>;

fn sweep_scale() -> f64 {
    std::env::var("QSVD_ACCEPTANCE_SWEEP_SCALE").ok().and_then(|s| s.parse().ok()).filter(|&x: &f64| x > 0.0).unwrap_or(1.0)
}

fn cap(base: usize) -> usize {
    ((base as f64 * sweep_scale()).round() as usize).max(1)
}

fn sweeps(max_sweeps: usize) -> SweepConfig {
    SweepConfig { max_sweeps, ..Default::default() }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

// ---------------------------------------------------------------------------
// Oracle helpers: everything below avoids the library's factorizations.
// ---------------------------------------------------------------------------

/// Coefficient matrix assembled bit by bit from the amplitudes.
fn dense_coefficients(amps: &[C64], a: &[usize], b: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(1 << a.len(), 1 << b.len(), |r, c| {
        let idx = a.iter().enumerate().filter(|(i, _)| r >> i & 1 == 1).fold(0, |acc, (_, &q)| acc | 1 << q)
            | b.iter().enumerate().filter(|(j, _)| c >> j & 1 == 1).fold(0, |acc, (_, &q)| acc | 1 << q);
        amps[idx]
    })
}

fn dense_overlap(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn random_cut(n: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>) {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let n_a = rng.random_range(1..n);
    (qubits[..n_a].to_vec(), qubits[n_a..].to_vec())
}

/// Unitary with first column `r`, by a phased Householder reflection.
fn householder_with_column(r: &[C64]) -> DMatrix<C64> {
    let n = r.len();
    let theta = r[0].arg();
    let phase = C64::from_polar(1.0, theta);
    let mut v: Vec<C64> = r.to_vec();
    v[0] -= phase;
    let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut h = DMatrix::<C64>::identity(n, n);
    if vv > 1e-300 {
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= 2.0 * v[i] * v[j].conj() / vv;
            }
        }
    }
    h * phase
}

/// Left singular vectors of `c` from the Jacobi eigensolver of `C C†`,
/// ordered by descending singular value.
fn oracle_left_vectors(c: &DMatrix<C64>) -> (Vec<f64>, Vec<Vec<C64>>) {
    let (vals, vecs) = oracle::jacobi_eigh(&(c * c.adjoint()));
    let n = vals.len();
    let order: Vec<usize> = (0..n).rev().collect();
    (
        order.iter().map(|&i| vals[i].max(0.0).sqrt()).collect(),
        order.iter().map(|&i| vecs.column(i).iter().copied().collect()).collect(),
    )
}

/// Orthonormal completion by Gram–Schmidt against unit vectors.
fn complete(columns: Vec<Vec<C64>>, n: usize) -> DMatrix<C64> {
    let mut cols = columns;
    let mut e = 0;
    while cols.len() < n {
        let mut cand = vec![C64::new(0.0, 0.0); n];
        cand[e] = C64::new(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let p = dense_overlap(c, &cand);
                cand.iter_mut().zip(c).for_each(|(x, a)| *x -= p * a);
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(cand.into_iter().map(|z| z / norm).collect());
        }
    }
    DMatrix::from_fn(n, n, |r, c| cols[c][r])
}

fn single_gate_circuit(u: DMatrix<C64>, n: usize) -> Result<LayeredCircuit, String> {
    let mut c = LayeredCircuit::new(n, 1, n, GateInit::Identity, 0).map_err(e)?;
    c.set_gate(0, ComplexMatrix::from_matrix(u).map_err(e)?).map_err(e)?;
    Ok(c)
}

fn heisenberg_ground(spec: &LatticeSpec) -> Result<(StateVector, BipartiteCut, Vec<f64>), String> {
    let h = build_hamiltonian(spec).map_err(e)?;
    let gs = ground_state(&h, 1e-12, 0).map_err(e)?;
    let cut = spec.default_cut().map_err(e)?;
    let coef = dense_coefficients(gs.state.amplitudes(), cut.subsystem_a(), cut.subsystem_b());
    let sigma = oracle::jacobi_singular_values(&coef);
    Ok((gs.state, cut, sigma))
}

fn gap(values: &[f64]) -> f64 {
    -2.0 * values[1].ln() + 2.0 * values[0].ln()
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn c1_exact_oracle() -> Check {
    let mut rng = seeded(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let s = StateVector::random(n, &mut rng).map_err(e)?;
        let (a, b) = random_cut(n, &mut rng);
        let cut = BipartiteCut::new(a.clone(), b.clone()).map_err(e)?;
        let lib = schmidt_values(&s, &cut).map_err(e)?;
        let ora = oracle::jacobi_singular_values(&dense_coefficients(s.amplitudes(), &a, &b));
        for (x, y) in lib.iter().zip(&ora) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |sigma diff| {worst:.2e} over 200 states")))
}

fn c2_bound() -> Check {
    let mut rng = seeded(202);
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    let mut worst_equality: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.random_range(2..=8);
        let s = StateVector::random(n, &mut rng).map_err(e)?;
        let (a, b) = random_cut(n, &mut rng);
        let cut = BipartiteCut::new(a.clone(), b.clone()).map_err(e)?;
        let d = 1usize << a.len().min(b.len());
        let decay = rng.random_range(0.05..=1.0);
        let cutoff = rng.random_range(1..=d);
        let w = reference_weights(decay, d, Some(cutoff)).map_err(e)?;
        let objective = BipartiteObjective::new(&s, &cut, &w).map_err(e)?;
        let coef = dense_coefficients(s.amplitudes(), &a, &b);
        let sigma = oracle::jacobi_singular_values(&coef);
        let bound: f64 = w.weights.iter().zip(&sigma).map(|(x, y)| x * y).sum();
        let layers = rng.random_range(1..=3);
        let u = LayeredCircuit::new(a.len(), layers, 2, GateInit::Haar, 2 * i).map_err(e)?;
        let v = LayeredCircuit::new(b.len(), layers, 2, GateInit::Haar, 2 * i + 1).map_err(e)?;
        let value = objective.evaluate(&u, &v).map_err(e)?;
        if value > bound + 1e-10 {
            violations += 1;
        }
        worst_margin = worst_margin.min(bound - value);
        // Optimal circuits from the oracle's singular vectors.
        let (svals, left) = oracle_left_vectors(&coef);
        let keep = d.min(svals.iter().filter(|&&x| x > 1e-9).count());
        let rights: Vec<Vec<C64>> = (0..keep)
            .map(|k| {
                let cu = coef.transpose() * DMatrix::from_iterator(left[k].len(), 1, left[k].iter().map(|z| z.conj()));
                cu.iter().map(|z| z / svals[k]).collect()
            })
            .collect();
        let u_opt = single_gate_circuit(complete(left[..keep].to_vec(), 1 << a.len()), a.len())?;
        let v_opt = single_gate_circuit(complete(rights, 1 << b.len()), b.len())?;
        let at_optimum = objective.evaluate(&u_opt, &v_opt).map_err(e)?;
        worst_equality = worst_equality.max((at_optimum - bound).abs());
    }
    let pass = violations == 0 && worst_equality <= 1e-8;
    Ok((pass, format!("{violations} violations in 1000, min margin {worst_margin:.2e}, equality gap {worst_equality:.2e}")))
}

fn c3_planted() -> Check {
    let mut successes = 0;
    let mut worst: f64 = 1.0;
    let mut stuck = Vec::new();
    for seed in 0..20u64 {
        let n = 4 + (seed % 3) as usize;
        let (n_a, n_b) = (n / 2, n - n / 2);
        let layers = 1 + (seed % 2) as usize;
        let cut = BipartiteCut::contiguous(n_a, n_b).map_err(e)?;
        let d = 1usize << n_a.min(n_b);
        let w = reference_weights(0.9, d, None).map_err(e)?;
        let pu = LayeredCircuit::new(n_a, layers, 2, GateInit::Haar, 1000 + seed).map_err(e)?;
        let pv = LayeredCircuit::new(n_b, layers, 2, GateInit::Haar, 2000 + seed).map_err(e)?;
        let target = qsvd_core::ansatz::trial_state(&pu, &pv, &w, &cut).map_err(e)?;
        let objective = BipartiteObjective::new(&target, &cut, &w).map_err(e)?;
        let mut u = LayeredCircuit::new(n_a, layers, 2, GateInit::Identity, 0).map_err(e)?;
        let mut v = LayeredCircuit::new(n_b, layers, 2, GateInit::Identity, 0).map_err(e)?;
        let trace = sweep_optimize(&mut u, &mut v, &objective, &sweeps(cap(20_000))).map_err(e)?;
        let reached = trace.final_objective();
        worst = worst.min(reached);
        if reached >= 1.0 - 1e-8 {
            successes += 1;
        } else {
            stuck.push(format!("seed {seed} n={n} M={layers}"));
        }
    }
    Ok((successes >= 18, format!("{successes}/20 planted targets recovered (worst overlap {worst:.10}; stuck: {})", stuck.join(", "))))
}

fn c4_chain_full() -> Check {
    let (target, cut, sigma) = heisenberg_ground(&LatticeSpec::chain(16, 1.0))?;
    let d = 1usize << cut.n_a().min(cut.n_b());
    let mut infidelities = Vec::new();
    for layers in [1usize, 2, 4] {
        let w = reference_weights(0.9, d, None).map_err(e)?;
        let config = MethodConfig { layers, seed: 0, sweep: sweeps(cap(300)), ..Default::default() };
        let r = full_svd(&target, &cut, &w, &config).map_err(e)?;
        infidelities.push(r.infidelity());
    }
    let decreasing = infidelities.windows(2).all(|p| p[1] < p[0]);
    let mut s1_errors = Vec::new();
    for cutoff in [32usize, 1] {
        let w = reference_weights(0.9, d, Some(cutoff)).map_err(e)?;
        let config = MethodConfig { layers: 4, seed: 0, sweep: sweeps(cap(800)), ..Default::default() };
        let r = full_svd(&target, &cut, &w, &config).map_err(e)?.with_oracle(&sigma);
        s1_errors.push(r.relative_error(0).ok_or("s1 undefined")?);
    }
    let cutoff_trend = s1_errors[1] < s1_errors[0];
    Ok((
        decreasing && cutoff_trend,
        format!(
            "1-F for M=1,2,4: {:.3e} {:.3e} {:.3e}; s1 rel err cutoff 32 -> 1: {:.3e} -> {:.3e}",
            infidelities[0], infidelities[1], infidelities[2], s1_errors[0], s1_errors[1]
        ),
    ))
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n + 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let x = i as f64 + 1.0;
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

fn c5_chain_deflation() -> Check {
    let (target, cut, sigma) = heisenberg_ground(&LatticeSpec::chain(16, 1.0))?;
    let config = MethodConfig { layers: 4, seed: 0, sweep: sweeps(cap(2000)), ..Default::default() };
    let (improved, _) = improved_deflation(&target, &cut, 20, 1e-12, &config).map_err(e)?;
    let improved = improved.with_oracle(&sigma);
    let (simple, _) = simple_deflation(&target, &cut, 5, &config).map_err(e)?;
    let simple = simple.with_oracle(&sigma);
    let s1 = improved.relative_error(0).ok_or("s1 undefined")?;
    let mut index_wise = true;
    let mut pairs = Vec::new();
    for n in 0..5 {
        let (a, b) = (improved.relative_error(n).ok_or("improved slot undefined")?, simple.relative_error(n).ok_or("simple slot undefined")?);
        index_wise &= a <= b;
        pairs.push(format!("{a:.1e}/{b:.1e}"));
    }
    let history: Vec<f64> = improved.metadata.history.iter().map(|h| (1.0 - h[0] / sigma[0]).abs()).collect();
    let trend = slope(&history);
    Ok((
        s1 <= 1e-3 && index_wise && trend < 0.0,
        format!("s1 rel err {s1:.2e}; improved/simple s1..s5 {}; s1-vs-N slope {trend:.2e}", pairs.join(" ")),
    ))
}

fn c6_core_matrix() -> Check {
    let mut rng = seeded(606);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = DMatrix::from_fn(16, 4, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = DMatrix::from_fn(4, 16, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut c = g * h;
        let norm = c.norm();
        c /= C64::new(norm, 0.0);
        let coef = ComplexMatrix::from_matrix(c.clone()).map_err(e)?;
        let count = rng.random_range(2..=6);
        let mut ledger = DeflationLedger::new(1e-12).map_err(e)?;
        let (mut us, mut vs) = (Vec::new(), Vec::new());
        for k in 0..count {
            // Mixtures of a shared direction and noise: far from orthogonal.
            let mix = |rng: &mut rand_chacha::ChaCha8Rng, base: &[C64]| -> Vec<C64> {
                let raw: Vec<C64> = base.iter().map(|z| z + 0.6 * C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
                let n = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                raw.into_iter().map(|z| z / n).collect()
            };
            let base_a: Vec<C64> = (0..16).map(|i| C64::new(if i == k % 16 { 1.0 } else { 0.25 }, 0.0)).collect();
            let base_b: Vec<C64> = (0..16).map(|i| C64::new(0.25, if i == (3 * k) % 16 { 1.0 } else { 0.0 })).collect();
            let u = mix(&mut rng, &base_a);
            let v = mix(&mut rng, &base_b);
            ledger.push_states(u.clone(), v.clone(), &coef).map_err(e)?;
            us.push(u);
            vs.push(v);
        }
        let lib = oracle::jacobi_singular_values(core_matrix(&ledger).map_err(e)?.matrix());
        // Dense projectors onto span{u_k} and span{v_k} from the oracle eigensolver.
        let projector = |states: &[Vec<C64>]| -> DMatrix<C64> {
            let m = DMatrix::from_fn(16, states.len(), |r, k| states[k][r]);
            let (vals, vecs) = oracle::jacobi_eigh(&(m.adjoint() * &m));
            let mut p = DMatrix::<C64>::zeros(16, 16);
            for (i, &lam) in vals.iter().enumerate() {
                if lam > 1e-12 {
                    let q = &m * vecs.column(i) / C64::new(lam.sqrt(), 0.0);
                    p += &q * q.adjoint();
                }
            }
            p
        };
        let (pa, pb) = (projector(&us), projector(&vs));
        let projected = &pa * &c * pb.transpose();
        let ora = oracle::jacobi_singular_values(&projected);
        for (x, y) in lib.iter().zip(&ora) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |sigma diff| {worst:.2e} over 100 ledgers")))
}

fn c7_ladder() -> Check {
    let config = MethodConfig { layers: 4, seed: 0, sweep: sweeps(cap(2000)), ..Default::default() };
    let (topo, cut, sigma) = heisenberg_ground(&LatticeSpec::ladder(8, 1.0, -0.1, PI))?;
    let oracle_gap = gap(&sigma);
    let (r, _) = improved_deflation(&topo, &cut, 20, 1e-12, &config).map_err(e)?;
    let est = r.schmidt_gap().ok_or("gap undefined")?;
    let (trivial, cut_t, sigma_t) = heisenberg_ground(&LatticeSpec::ladder(8, 1.0, 0.1, PI))?;
    let oracle_gap_t = gap(&sigma_t);
    let (rt, _) = improved_deflation(&trivial, &cut_t, 20, 1e-12, &config).map_err(e)?;
    let est_t = rt.schmidt_gap().ok_or("gap undefined")?;
    let pass = oracle_gap.abs() <= 1e-8 && est.abs() <= 1e-2 && (est_t - oracle_gap_t).abs() <= 1e-2;
    Ok((
        pass,
        format!("J_perp=-0.1: oracle gap {oracle_gap:.1e}, estimate {est:.2e}; J_perp=+0.1: oracle {oracle_gap_t:.4}, estimate {est_t:.4}"),
    ))
}

/// Bit-level simulator for the two-ancilla interferometer.
struct Sim {
    amps: Vec<C64>,
}

impl Sim {
    fn one_qubit(&mut self, q: usize, m: [[C64; 2]; 2]) {
        for i in 0..self.amps.len() {
            if i >> q & 1 == 0 {
                let j = i | 1 << q;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn controlled_register(&mut self, control: usize, on: usize, reg: &[usize], u: &DMatrix<C64>) {
        let mask: usize = reg.iter().map(|&q| 1 << q).sum();
        for base in 0..self.amps.len() {
            if base & mask != 0 || base >> control & 1 != on {
                continue;
            }
            let index = |k: usize| reg.iter().enumerate().filter(|(b, _)| k >> b & 1 == 1).fold(base, |acc, (_, &q)| acc | 1 << q);
            let old: Vec<C64> = (0..u.nrows()).map(|k| self.amps[index(k)]).collect();
            for r in 0..u.nrows() {
                self.amps[index(r)] = (0..u.ncols()).map(|k| u[(r, k)] * old[k]).sum();
            }
        }
    }

    fn controlled_swap(&mut self, control: usize, a: usize, b: usize) {
        for i in 0..self.amps.len() {
            if i >> control & 1 == 1 && i >> a & 1 == 1 && i >> b & 1 == 0 {
                self.amps.swap(i, i ^ (1 << a) ^ (1 << b));
            }
        }
    }
}

fn gate_level_probabilities(phi: &[C64], g: &[C64], r: &[C64], varphi: f64, n: usize) -> [[f64; 2]; 2] {
    let total = 2 + 2 * n;
    let reg3: Vec<usize> = (2..2 + n).collect();
    let reg4: Vec<usize> = (2 + n..2 + 2 * n).collect();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
    for (k, z) in phi.iter().enumerate() {
        amps[k << (2 + n)] = *z;
    }
    let mut sim = Sim { amps };
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let had = [[h, h], [h, -h]];
    sim.one_qubit(0, had);
    sim.one_qubit(1, had);
    sim.controlled_register(1, 1, &reg3, &householder_with_column(r));
    let zero = C64::new(0.0, 0.0);
    sim.one_qubit(1, [[C64::from_polar(1.0, -varphi / 2.0), zero], [zero, C64::from_polar(1.0, varphi / 2.0)]]);
    sim.controlled_register(1, 0, &reg3, &householder_with_column(g));
    for k in 0..n {
        sim.controlled_swap(0, reg3[k], reg4[k]);
    }
    sim.one_qubit(1, had);
    sim.one_qubit(0, had);
    let mut p = [[0.0; 2]; 2];
    for (i, z) in sim.amps.iter().enumerate() {
        p[i & 1][i >> 1 & 1] += z.norm_sqr();
    }
    p
}

fn c8_interferometer() -> Check {
    let mut rng = seeded(808);
    let (mut worst_sum, mut worst_parity): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let n = rng.random_range(1..=5);
        let phi = StateVector::random(n, &mut rng).map_err(e)?;
        let g = StateVector::random(n, &mut rng).map_err(e)?;
        let r = StateVector::random(n, &mut rng).map_err(e)?;
        let varphi = rng.random_range(0.0..2.0 * PI);
        let out = interferometric_probs(&phi, &g, &r, varphi).map_err(e)?;
        let sum: f64 = out.probabilities.iter().flatten().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        let expected = (C64::from_polar(1.0, varphi)
            * dense_overlap(phi.amplitudes(), r.amplitudes())
            * dense_overlap(g.amplitudes(), phi.amplitudes()))
        .re;
        worst_parity = worst_parity.max((out.parity - expected).abs());
    }
    let mut worst_gate: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(1..=3);
        let phi = StateVector::random(n, &mut rng).map_err(e)?;
        let g = StateVector::random(n, &mut rng).map_err(e)?;
        let r = StateVector::random(n, &mut rng).map_err(e)?;
        let varphi = rng.random_range(0.0..2.0 * PI);
        let closed = interferometric_probs(&phi, &g, &r, varphi).map_err(e)?;
        let sim = gate_level_probabilities(phi.amplitudes(), g.amplitudes(), r.amplitudes(), varphi, n);
        for a in 0..2 {
            for b in 0..2 {
                worst_gate = worst_gate.max((closed.probabilities[a][b] - sim[a][b]).abs());
            }
        }
    }
    Ok((
        worst_sum <= 1e-12 && worst_parity <= 1e-12 && worst_gate <= 1e-12,
        format!("sum err {worst_sum:.1e}, parity err {worst_parity:.1e}, gate-level err {worst_gate:.1e}"),
    ))
}

fn c9_mps() -> Check {
    let mut rng = seeded(909);
    let mut worst_fid: f64 = 1.0;
    let mut canonical_failures = 0;
    let mut bound_failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let s = StateVector::random(n, &mut rng).map_err(e)?;
        let n_a = rng.random_range(1..n);
        let cut = BipartiteCut::contiguous(n_a, n - n_a).map_err(e)?;
        let mps = state_to_mps(&s, &cut, None).map_err(e)?;
        if !verify_canonical(&mps).passes() {
            canonical_failures += 1;
        }
        if !mps.bond_bound_violations().is_empty() {
            bound_failures += 1;
        }
        let back = mps_to_unitaries(&mps).map_err(e)?.to_state().map_err(e)?;
        worst_fid = worst_fid.min(dense_overlap(s.amplitudes(), back.amplitudes()).norm_sqr());
    }
    Ok((
        worst_fid >= 1.0 - 1e-10 && canonical_failures == 0 && bound_failures == 0,
        format!("min fidelity 1-{:.1e}, {canonical_failures} canonical failures, {bound_failures} bond-bound failures", 1.0 - worst_fid),
    ))
}

fn numeric_rank(values: &[f64], tol: f64) -> usize {
    values.iter().filter(|&&v| v > tol).count()
}

fn c10_omega() -> Check {
    let mut worst_amp: f64 = 0.0;
    for p in [0.3, 0.9] {
        for k in 1..=8 {
            let s = rotation_product_state(&omega_exponential(p, k).map_err(e)?).map_err(e)?;
            let raw: Vec<f64> = (0..1 << k).map(|n| p.powi(n)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (z, x) in s.amplitudes().iter().zip(&raw) {
                worst_amp = worst_amp.max((z - C64::new(x / norm, 0.0)).norm());
            }
        }
    }
    // Truncated exponential on 8 qubits: rank one at c = 2^{n_a}, two when
    // c exceeds 2^{n_a} and is not a multiple of it. Multiples stay rank one.
    let total = 8;
    let mut cutoff_ok = true;
    for n_a in 1..total {
        let block = 1usize << n_a;
        for c in [block, 3 * block, block + 1, 2 * block + block / 2 + 1] {
            if c >= 1 << total {
                continue;
            }
            let w = truncated_exponential_weights(0.9, c, total).map_err(e)?;
            let amps: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
            let a: Vec<usize> = (0..n_a).collect();
            let b: Vec<usize> = (n_a..total).collect();
            let dense = numeric_rank(&oracle::jacobi_singular_values(&dense_coefficients(&amps, &a, &b)), 1e-12);
            let core = numeric_rank(&oracle::jacobi_singular_values(omega_cutoff_core(0.9, c, n_a, total).map_err(e)?.matrix()), 1e-12);
            let expected = if c % block == 0 { 1 } else { 2 };
            cutoff_ok &= dense == expected && core == expected;
        }
    }
    let mut max_hann_rank = 0;
    for n in 2..=16 {
        let s = weight_state(&omega_hann_weights(n).map_err(e)?).map_err(e)?;
        for n_a in 1..n {
            let a: Vec<usize> = (0..n_a).collect();
            let b: Vec<usize> = (n_a..n).collect();
            let values = if n <= 12 {
                oracle::jacobi_singular_values(&dense_coefficients(s.amplitudes(), &a, &b))
            } else {
                schmidt_values(&s, &BipartiteCut::contiguous(n_a, n - n_a).map_err(e)?).map_err(e)?
            };
            max_hann_rank = max_hann_rank.max(numeric_rank(&values, 1e-10));
        }
    }
    let fit = fit_weight_state(&omega_hann_weights(8).map_err(e)?, 1, 3, 0, &sweeps(cap(20_000))).map_err(e)?;
    Ok((
        worst_amp <= 1e-12 && cutoff_ok && max_hann_rank <= 3 && fit.infidelity <= 1e-8,
        format!(
            "exponential amp err {worst_amp:.1e}; cutoff ranks ok: {cutoff_ok}; max Hann rank {max_hann_rank}; gate-size-3 Hann fit infidelity {:.1e}",
            fit.infidelity
        ),
    ))
}

fn c11_error_propagation() -> Check {
    let sigma = geometric_spectrum(0.5, 12);
    let rows = error_propagation_study(&sigma, 1e-6, &[0.5, 1.0, 2.0], 1000, 1111).map_err(e)?;
    let (e1, e2) = (rows[1].mean_relative_error[5].ok_or("p=1 undefined")?, rows[2].mean_relative_error[5].ok_or("p=2 undefined")?);
    let resolved_quiet = !rows[0].any_divergent();
    let tail = geometric_spectrum(0.5, 24);
    let tail_rows = error_propagation_study(&tail, 1e-6, &[0.5, 1.0], 1000, 1112).map_err(e)?;
    let below: Vec<usize> = (0..tail.len()).filter(|&n| tail[n] < 1e-6).collect();
    let flagged = below.iter().all(|&n| tail_rows[0].divergent[n]) && !below.is_empty();
    Ok((
        e2 >= 2.0 * e1 && flagged && resolved_quiet,
        format!(
            "index 6 mean rel err p=1 {e1:.2e}, p=2 {e2:.2e} (ratio {:.1}); p=0.5 flags {} tail slots below noise",
            e2 / e1,
            below.len()
        ),
    ))
}

fn c12_vectorization() -> Check {
    let mut rng = seeded(1212);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let terms_count = rng.random_range(1..=4);
        let mut terms = Vec::new();
        let mut a = DMatrix::<C64>::zeros(4, 4);
        for _ in 0..terms_count {
            let gamma = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let g = haar_unitary(4, &mut rng);
            a += g.matrix() * gamma;
            terms.push((gamma, g));
        }
        let state = vectorize_operator(&terms).map_err(e)?.normalize().map_err(e)?;
        let cut = BipartiteCut::contiguous(2, 2).map_err(e)?;
        let lib = schmidt_values(&state, &cut).map_err(e)?;
        let fro = a.norm();
        let ora = oracle::jacobi_singular_values(&(a / C64::new(fro, 0.0)));
        for (x, y) in lib.iter().zip(&ora) {
            worst = worst.max((x - y).abs());
        }
        let _ = coefficient_matrix(&state, &cut).map_err(e)?;
    }
    Ok((worst <= 1e-12, format!("max |sigma diff| {worst:.2e} over 100 operators")))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("QSVD_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion { id: 1, name: "exact-oracle agreement", budget: Duration::from_secs(10), run: c1_exact_oracle },
        Criterion { id: 2, name: "weighted-sum bound", budget: Duration::from_secs(30), run: c2_bound },
        Criterion { id: 3, name: "planted-solution recovery", budget: minutes(2), run: c3_planted },
        Criterion { id: 4, name: "chain full-method trends", budget: minutes(120), run: c4_chain_full },
        Criterion { id: 5, name: "chain deflation comparison", budget: minutes(180), run: c5_chain_deflation },
        Criterion { id: 6, name: "core-matrix equivalence", budget: minutes(1), run: c6_core_matrix },
        Criterion { id: 7, name: "ladder degeneracy", budget: minutes(120), run: c7_ladder },
        Criterion { id: 8, name: "interferometric identity", budget: Duration::from_secs(30), run: c8_interferometer },
        Criterion { id: 9, name: "MPS round trip", budget: minutes(1), run: c9_mps },
        Criterion { id: 10, name: "weight-state constructions", budget: minutes(10), run: c10_omega },
        Criterion { id: 11, name: "p=1 robustness", budget: Duration::from_secs(10), run: c11_error_propagation },
        Criterion { id: 12, name: "operator vectorization", budget: Duration::from_secs(10), run: c12_vectorization },
    ];
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.as_ref().is_none_or(|o| o.contains(&c.id))) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= c.budget, detail),
            Err(err) => (false, format!("error: {err}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {:<28} {:>8.1}s / {:>6}s  {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
