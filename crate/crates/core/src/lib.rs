//! Variational extraction of Schmidt spectra on dense statevectors.

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod methods;
pub mod mps;
pub mod rng;
pub mod state;
pub mod sweep;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
pub(crate) mod oracle;

pub use error::{QsvdError, Result};
pub use linalg::{ComplexMatrix, SvdResult, C64};
pub use state::{BipartiteCut, StateVector};
