use crate::ansatz::{LayeredCircuit, ReferenceWeights};
use crate::error::{dim, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::{coefficient_matrix, BipartiteCut, StateVector};
use crate::sweep::BipartiteObjective;

use super::{optimize_pair, sort_descending, Method, MethodConfig, SpectrumMetadata, SpectrumResult};

/// `⟨k, k|U† ⊗ V†|Φ⟩` for every `k < 2^min(n_a, n_b)`.
pub fn diagonal_overlaps(u: &LayeredCircuit, v: &LayeredCircuit, coefficients: &ComplexMatrix) -> Result<Vec<C64>> {
    let (da, db) = (1usize << u.num_qubits(), 1usize << v.num_qubits());
    if coefficients.rows() != da || coefficients.cols() != db {
        return Err(dim(format!("{}x{} coefficients for circuits on {da}x{db}", coefficients.rows(), coefficients.cols())));
    }
    let d = da.min(db);
    let uc = u.columns(d);
    let vc = v.columns(d).conjugate();
    let cv = coefficients.matrix() * vc.matrix();
    Ok((0..d).map(|k| uc.column(k).dotc(&cv.column(k))).collect())
}

/// Optimizes `Re Σ_k w_k ⟨U k, V k|Φ⟩` and reads the spectrum off the sorted
/// magnitudes of the diagonal overlaps.
pub fn full_svd(target: &StateVector, cut: &BipartiteCut, weights: &ReferenceWeights, config: &MethodConfig) -> Result<SpectrumResult> {
    config.validate()?;
    let objective = BipartiteObjective::new(target, cut, weights)?;
    let pair = optimize_pair(&objective, cut.n_a(), cut.n_b(), config, 0)?;
    let coef = coefficient_matrix(target, cut)?;
    let mut values: Vec<f64> = diagonal_overlaps(&pair.u, &pair.v, &coef)?.iter().map(|z| z.norm()).collect();
    sort_descending(&mut values);
    let mut meta = SpectrumMetadata::from_config(config);
    meta.cutoffs = vec![weights.support()];
    meta.runs.push(pair.info);
    Ok(SpectrumResult::new(Method::Full, values.into_iter().map(Some).collect(), meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{reference_weights, GateInit};
    use crate::rng::seeded;
    use crate::state::{product_state, schmidt_values};
    use crate::sweep::SweepConfig;

    fn config(layers: usize) -> MethodConfig {
        MethodConfig { layers, seed: 3, sweep: SweepConfig { max_sweeps: 2000, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn bell_state() {
        let cut = BipartiteCut::contiguous(1, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(2, vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]).unwrap();
        let w = reference_weights(1.0, 2, None).unwrap();
        let r = full_svd(&bell, &cut, &w, &config(1)).unwrap();
        assert!((r.value(0).unwrap() - h).abs() < 1e-8);
        assert!((r.value(1).unwrap() - h).abs() < 1e-8);
    }

    #[test]
    fn product_state_any_depth() {
        let cut = BipartiteCut::contiguous(2, 3).unwrap();
        let mut rng = seeded(4);
        let a = StateVector::random(2, &mut rng).unwrap();
        let b = StateVector::random(3, &mut rng).unwrap();
        let target = product_state(a.amplitudes(), b.amplitudes(), &cut).unwrap();
        let w = reference_weights(0.9, 4, None).unwrap();
        for layers in [1, 2] {
            let r = full_svd(&target, &cut, &w, &config(layers)).unwrap();
            assert!((r.value(0).unwrap() - 1.0).abs() < 1e-8);
            assert!(r.values[1..].iter().all(|s| s.unwrap() < 1e-4));
        }
    }

    #[test]
    fn objective_within_bound() {
        let cut = BipartiteCut::contiguous(3, 3).unwrap();
        let target = StateVector::random(6, &mut seeded(8)).unwrap();
        let w = reference_weights(0.9, 8, None).unwrap();
        let sigma = schmidt_values(&target, &cut).unwrap();
        let bound: f64 = w.weights.iter().zip(&sigma).map(|(a, b)| a * b).sum();
        let r = full_svd(&target, &cut, &w, &config(2)).unwrap();
        assert!(r.metadata.runs[0].objective <= bound + 1e-10);
    }

    #[test]
    fn diagonal_overlaps_of_identity_circuits() {
        let cut = BipartiteCut::contiguous(2, 2).unwrap();
        let target = StateVector::random(4, &mut seeded(1)).unwrap();
        let coef = coefficient_matrix(&target, &cut).unwrap();
        let u = LayeredCircuit::new(2, 1, 2, GateInit::Identity, 0).unwrap();
        let d = diagonal_overlaps(&u, &u, &coef).unwrap();
        for k in 0..4 {
            assert!((d[k] - coef[(k, k)]).norm() < 1e-15);
        }
    }
}
