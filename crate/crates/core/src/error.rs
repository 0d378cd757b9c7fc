use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceMismatch { trace: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("function undefined on eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },
    #[error("relative entropy diverges: support of rho not contained in support of sigma")]
    InfiniteDivergence,
    #[error("Gibbs state out of floating-point range (beta*spread = {exponent})")]
    Range { exponent: f64 },
    #[error("state entropy is at or below the ground-state limit; no finite beta matches it")]
    UnboundedBeta,
    #[error("Hamiltonian is fully degenerate; no temperature matches entropy {entropy}")]
    NoSolution { entropy: f64 },
    #[error("expected {expected} basis parameters, found {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("unsupported ancilla dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
