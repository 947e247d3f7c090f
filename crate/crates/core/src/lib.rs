//! Simulator for flux-pumped Kerr-cat qubits built from symmetrically threaded
//! SQUIDs (STS) or a single SQUID.
//!
//! Energies are angular frequencies in rad/μs and times are in μs. Circuit
//! inputs are quoted as E/h in MHz and converted on entry.

pub mod error;
pub mod circuit;
pub mod dissipation;
pub mod fock;
pub mod hamiltonian;
pub mod lifetime;
pub mod liouvillian;
pub mod spectra;

pub use error::{Error, Result};
pub use faer::c64;
