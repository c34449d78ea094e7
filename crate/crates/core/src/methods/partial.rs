use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::reference_weights;
use crate::error::{invalid, Result};
use crate::state::{coefficient_matrix, BipartiteCut, StateVector};
use crate::sweep::BipartiteObjective;

use super::full::diagonal_overlaps;
use super::{optimize_pair, sort_descending, Method, MethodConfig, SpectrumMetadata, SpectrumResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialOptions {
    /// Weight decay inside each truncated optimization.
    pub decay: f64,
    /// Exponent of the cumulative sums that are differenced.
    pub power: f64,
    pub cutoffs: Vec<usize>,
}

impl Default for PartialOptions {
    fn default() -> Self {
        Self { decay: 0.9, power: 1.0, cutoffs: vec![1, 2, 3, 4] }
    }
}

impl PartialOptions {
    pub fn validate(&self, max_cutoff: usize) -> Result<()> {
        if !(self.power > 0.0) {
            return Err(invalid(format!("power must be positive, got {}", self.power)));
        }
        if self.cutoffs.first() != Some(&1) {
            return Err(invalid("cutoffs must start at 1"));
        }
        if self.cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("cutoffs must be strictly ascending"));
        }
        if *self.cutoffs.last().unwrap() > max_cutoff {
            return Err(invalid(format!("cutoff exceeds the {max_cutoff} available Schmidt slots")));
        }
        Ok(())
    }
}

/// `s_k = (S_k − S_{k−1})^{1/p}` from cumulative sums `S_c = Σ_{n≤c} (s_n^{(c)})^p`
/// given at ascending cutoffs. Slots without both neighbouring sums, and
/// slots whose difference is not positive, are undefined.
pub fn telescoping_recovery(cutoffs: &[usize], sums: &[f64], power: f64) -> Vec<Option<f64>> {
    let len = cutoffs.last().copied().unwrap_or(0);
    let mut out = vec![None; len];
    for (j, &c) in cutoffs.iter().enumerate() {
        let previous = match (j, c) {
            (_, 1) => Some(0.0),
            (0, _) => None,
            _ if cutoffs[j - 1] == c - 1 => Some(sums[j - 1]),
            _ => None,
        };
        if let Some(prev) = previous {
            let diff = sums[j] - prev;
            if diff > 0.0 && diff.is_finite() {
                out[c - 1] = Some(diff.powf(1.0 / power));
            }
        }
    }
    out
}

/// One truncated optimization per cutoff; the spectrum is recovered by
/// differencing consecutive cumulative sums.
pub fn partial_svd(target: &StateVector, cut: &BipartiteCut, options: &PartialOptions, config: &MethodConfig) -> Result<SpectrumResult> {
    config.validate()?;
    let d = 1usize << cut.n_a().min(cut.n_b());
    options.validate(d)?;
    let coef = coefficient_matrix(target, cut)?;
    let runs: Vec<_> = options
        .cutoffs
        .par_iter()
        .enumerate()
        .map(|(j, &c)| -> Result<_> {
            let w = reference_weights(options.decay, d, Some(c))?;
            let objective = BipartiteObjective::from_coefficients(coef.clone(), &w.weights[..c])?;
            let pair = optimize_pair(&objective, cut.n_a(), cut.n_b(), config, j as u64)?;
            let mut s: Vec<f64> = diagonal_overlaps(&pair.u, &pair.v, &coef)?.iter().map(|z| z.norm()).collect();
            sort_descending(&mut s);
            let sum: f64 = s[..c].iter().map(|x| x.powf(options.power)).sum();
            Ok((sum, pair.info))
        })
        .collect::<Result<_>>()?;
    let sums: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let values = telescoping_recovery(&options.cutoffs, &sums, options.power);
    let mut meta = SpectrumMetadata::from_config(config);
    meta.cutoffs = options.cutoffs.clone();
    meta.runs = runs.into_iter().map(|r| r.1).collect();
    let undefined = values.iter().filter(|v| v.is_none()).count();
    if undefined > 0 {
        meta.notes.push(format!("{undefined} slots undefined (missing neighbouring cutoff or non-positive difference)"));
    }
    Ok(SpectrumResult::new(Method::Partial, values, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::state::schmidt_values;
    use crate::sweep::SweepConfig;

    #[test]
    fn telescoping_identity() {
        let sigma = [0.7, 0.5, 0.4, 0.3];
        let cutoffs = [1, 2, 3, 4];
        let sums: Vec<f64> = (1..=4).map(|c| sigma[..c].iter().sum()).collect();
        let s = telescoping_recovery(&cutoffs, &sums, 1.0);
        for k in 0..4 {
            assert!((s[k].unwrap() - sigma[k]).abs() < 1e-15);
        }
        let sums2: Vec<f64> = (1..=4).map(|c| sigma[..c].iter().map(|x| x * x).sum()).collect();
        let s = telescoping_recovery(&cutoffs, &sums2, 2.0);
        assert!((s[3].unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn negative_difference_is_undefined() {
        let s = telescoping_recovery(&[1, 2, 3], &[0.7, 0.69, 0.9], 1.0);
        assert!(s[0].is_some());
        assert_eq!(s[1], None);
        assert!(s[2].is_some());
    }

    #[test]
    fn gaps_leave_slots_undefined() {
        let s = telescoping_recovery(&[1, 2, 4], &[0.7, 1.2, 1.6], 1.0);
        assert_eq!(s.len(), 4);
        assert_eq!(s[2], None);
        assert_eq!(s[3], None);
    }

    #[test]
    fn options_validation() {
        let o = PartialOptions { cutoffs: vec![2, 3], ..Default::default() };
        assert!(o.validate(8).is_err());
        let o = PartialOptions { cutoffs: vec![1, 1], ..Default::default() };
        assert!(o.validate(8).is_err());
        let o = PartialOptions { cutoffs: vec![1, 16], ..Default::default() };
        assert!(o.validate(8).is_err());
        let o = PartialOptions { power: 0.0, ..Default::default() };
        assert!(o.validate(8).is_err());
    }

    #[test]
    fn expressive_circuits_recover_spectrum() {
        // Two-qubit subsystems with a full two-qubit gate reach every state.
        let cut = BipartiteCut::contiguous(2, 2).unwrap();
        let target = StateVector::random(4, &mut seeded(2)).unwrap();
        let sigma = schmidt_values(&target, &cut).unwrap();
        let config = MethodConfig { layers: 1, seed: 5, sweep: SweepConfig { max_sweeps: 3000, ..Default::default() }, ..Default::default() };
        let r = partial_svd(&target, &cut, &PartialOptions::default(), &config).unwrap();
        for k in 0..4 {
            assert!((r.value(k).unwrap() - sigma[k]).abs() < 1e-8, "k={k}");
        }
    }
}
