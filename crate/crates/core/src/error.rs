use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid link ({i}, {j})")]
    InvalidLink { i: usize, j: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid partition mask {mask:#x} for {n_sites} sites")]
    InvalidPartition { mask: u64, n_sites: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric input error: {0}")]
    NumericInput(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("underdetermined system: {equations} equations for {unknowns} unknowns")]
    Underdetermined { equations: usize, unknowns: usize },
    #[error("incomplete data: {0}")]
    IncompleteData(String),
    #[error("mean entropy is zero, relative error undefined")]
    EpsilonUndefined,
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("degenerate Fermi level: gap {gap:e} between occupied and empty levels")]
    FermiDegeneracy { gap: f64 },
    #[error("ambiguous nontrivial eigenvalue for site {site}: candidates {candidates:?}")]
    AmbiguousMode { site: usize, candidates: Vec<f64> },
    #[error("degenerate ground state: gap {gap:e} below tolerance {tol:e}")]
    DegenerateGroundState { gap: f64, tol: f64 },
    #[error("eigensolver did not converge: residual {residual:e}")]
    NoConvergence { residual: f64 },
    #[error("tensor is not in canonical form: {0}")]
    CanonicalForm(String),
    #[error("transfer matrix is not diagonalizable: {0}")]
    NonDiagonalizable(String),
    #[error("singular weight: level {level:e} carries correction weight {weight:e}")]
    SingularWeight { level: f64, weight: f64 },
    #[error("imaginary residue {0:e} exceeds tolerance")]
    ImaginaryResidue(f64),
    #[error("numerical conditioning: {0}")]
    Conditioning(String),
    #[error("imaginary-time evolution did not converge, last energy change {delta:e}")]
    Convergence { delta: f64 },
}
