use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("not a valid density matrix: {0}")]
    NotAState(String),
    #[error("state is not entangled (single nonzero Schmidt coefficient)")]
    NotEntangled,
    #[error("map is not completely positive (min Choi eigenvalue {min_eig:e})")]
    NotCp { min_eig: f64 },
    #[error("reference density is not faithful (min eigenvalue {min_eig:e})")]
    NotFaithful { min_eig: f64 },
    #[error("map does not preserve Hermiticity (Choi asymmetry {asymmetry:e})")]
    NotHermitianPreserving { asymmetry: f64 },
    #[error(
        "Størmer condition fails (block min eig {block:e}, transposed min eig {transposed:e})"
    )]
    ConditionFails { block: f64, transposed: f64 },
    #[error("a2·a1⁻¹ is not normal (commutator residual {residual:e})")]
    NormalityFails { residual: f64 },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
