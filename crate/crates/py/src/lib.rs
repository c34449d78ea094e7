use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qsvd_core::ansatz::reference_weights;
use qsvd_core::hamiltonian::{build_hamiltonian, ground_state, LatticeSpec};
use qsvd_core::measurement;
use qsvd_core::methods::{full_svd, improved_deflation, partial_svd, simple_deflation, MethodConfig, PartialOptions};
use qsvd_core::mps::{mps_to_unitaries, state_to_mps};
use qsvd_core::sweep::SweepConfig;
use qsvd_core::{state, BipartiteCut, QsvdError, StateVector};

fn err(e: QsvdError) -> PyErr {
    match e {
        QsvdError::NoConvergence(_) | QsvdError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_state(amplitudes: Vec<Complex64>) -> PyResult<StateVector> {
    let n = amplitudes.len();
    if !n.is_power_of_two() {
        return Err(PyValueError::new_err(format!("{n} amplitudes is not a power of two")));
    }
    StateVector::new(n.trailing_zeros() as usize, amplitudes).map_err(err)
}

fn to_cut(num_qubits: usize, subsystem_a: Vec<usize>) -> PyResult<BipartiteCut> {
    let b = (0..num_qubits).filter(|q| !subsystem_a.contains(q)).collect();
    BipartiteCut::new(subsystem_a, b).map_err(err)
}

/// Schmidt values of `amplitudes` across `subsystem_a` and its complement.
#[pyfunction]
fn schmidt_values(amplitudes: Vec<Complex64>, subsystem_a: Vec<usize>) -> PyResult<Vec<f64>> {
    let s = to_state(amplitudes)?;
    let cut = to_cut(s.num_qubits(), subsystem_a)?;
    state::schmidt_values(&s, &cut).map_err(err)
}

/// Ground state of a lattice given as JSON. Returns `(energy, amplitudes, subsystem_a)`.
#[pyfunction]
#[pyo3(signature = (lattice_json, tol = 1e-12))]
fn lattice_ground_state(lattice_json: &str, tol: f64) -> PyResult<(f64, Vec<Complex64>, Vec<usize>)> {
    let spec: LatticeSpec = serde_json::from_str(lattice_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let gs = ground_state(&build_hamiltonian(&spec).map_err(err)?, tol, 0).map_err(err)?;
    let cut = spec.default_cut().map_err(err)?;
    Ok((gs.energy, gs.state.into_amplitudes(), cut.subsystem_a().to_vec()))
}

/// Variational spectrum estimate. Returns `(values, result_json)`; undefined slots are `None`.
#[pyfunction]
#[pyo3(signature = (amplitudes, subsystem_a, method = "improved", layers = 4, gate_size = 2, steps = 20, decay = 0.9, eps = 1e-12, seed = 0, max_sweeps = 20000))]
#[allow(clippy::too_many_arguments)]
fn estimate_spectrum(
    py: Python<'_>,
    amplitudes: Vec<Complex64>,
    subsystem_a: Vec<usize>,
    method: &str,
    layers: usize,
    gate_size: usize,
    steps: usize,
    decay: f64,
    eps: f64,
    seed: u64,
    max_sweeps: usize,
) -> PyResult<(Vec<Option<f64>>, String)> {
    let s = to_state(amplitudes)?;
    let cut = to_cut(s.num_qubits(), subsystem_a)?;
    let config = MethodConfig { layers, gate_size, seed, sweep: SweepConfig { max_sweeps, ..Default::default() }, ..Default::default() };
    let method = method.to_string();
    let result = py.detach(|| {
        let slots = 1usize << cut.n_a().min(cut.n_b());
        match method.as_str() {
            "full" => full_svd(&s, &cut, &reference_weights(decay, slots, None)?, &config),
            "partial" => partial_svd(&s, &cut, &PartialOptions { decay, ..Default::default() }, &config),
            "simple" => Ok(simple_deflation(&s, &cut, steps, &config)?.0),
            "improved" => Ok(improved_deflation(&s, &cut, steps, eps, &config)?.0),
            other => Err(QsvdError::InvalidArgument(format!("unknown method {other:?}"))),
        }
    });
    let result = result.map_err(err)?;
    let json = result.to_json().map_err(err)?;
    Ok((result.values, json))
}

/// Closed-form interferometer statistics. Returns `(probabilities, parity)`.
#[pyfunction]
fn interferometric_probs(phi: Vec<Complex64>, g: Vec<Complex64>, r: Vec<Complex64>, varphi: f64) -> PyResult<([[f64; 2]; 2], f64)> {
    let out = measurement::interferometric_probs(&to_state(phi)?, &to_state(g)?, &to_state(r)?, varphi).map_err(err)?;
    Ok((out.probabilities, out.parity))
}

/// Canonical MPS of a state as JSON, optionally truncated.
#[pyfunction]
#[pyo3(signature = (amplitudes, subsystem_a, max_bond = None))]
fn state_to_mps_json(amplitudes: Vec<Complex64>, subsystem_a: Vec<usize>, max_bond: Option<usize>) -> PyResult<String> {
    let s = to_state(amplitudes)?;
    let cut = to_cut(s.num_qubits(), subsystem_a)?;
    state_to_mps(&s, &cut, max_bond).and_then(|m| m.to_json()).map_err(err)
}

/// State rebuilt from the canonical MPS through its unitary circuit.
#[pyfunction]
fn mps_round_trip(amplitudes: Vec<Complex64>, subsystem_a: Vec<usize>) -> PyResult<Vec<Complex64>> {
    let s = to_state(amplitudes)?;
    let cut = to_cut(s.num_qubits(), subsystem_a)?;
    let mps = state_to_mps(&s, &cut, None).map_err(err)?;
    Ok(mps_to_unitaries(&mps).and_then(|c| c.to_state()).map_err(err)?.into_amplitudes())
}

#[pymodule]
fn qsvd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(schmidt_values, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(interferometric_probs, m)?)?;
    m.add_function(wrap_pyfunction!(state_to_mps_json, m)?)?;
    m.add_function(wrap_pyfunction!(mps_round_trip, m)?)?;
    Ok(())
}
