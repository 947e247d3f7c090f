use faer::c64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock space: {0}")]
    InvalidSpace(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("truncation risk: |alpha|^2 = {norm_sq:.3} does not fit in dim {dim}; use dim >= {suggested_dim}")]
    TruncationRisk { norm_sq: f64, dim: usize, suggested_dim: usize },
    #[error("odd cat state with alpha = 0 is the zero vector")]
    DegenerateCat,
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
    #[error("not a transmon: E_C = {ec} MHz must be below E_J2 = {ej2} MHz")]
    NotATransmon { ec: f64, ej2: f64 },
    #[error("topology: {0}")]
    Topology(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("bath specification: {0}")]
    BathSpec(String),
    #[error("Hamiltonian breaks parity symmetry (relative commutator {0:.3e})")]
    ParitySymmetry(f64),
    #[error("resource guard: {what} = {value} exceeds limit {limit}")]
    ResourceGuard { what: &'static str, value: usize, limit: usize },
    #[error("size: {0}")]
    Size(String),
    #[error("integrator: {0}")]
    Integrator(String),
    #[error("propagator not unitary to tolerance (defect {0:.3e})")]
    PropagatorAccuracy(f64),
    #[error("no eigenmode with dominant ground-coherence weight among {} modes", spectrum.len())]
    ModeIdentification { spectrum: Vec<c64> },
    #[error("linear algebra: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
