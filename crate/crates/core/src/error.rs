use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state not PPT (min eigenvalue of partial transpose {min_eigenvalue:.3e})")]
    NotPpt { min_eigenvalue: f64 },

    #[error("channel not completely co-positive (min eigenvalue of transposed Choi {min_eigenvalue:.3e})")]
    NotCopositive { min_eigenvalue: f64 },

    #[error("block trace norms are asymmetric: {0}")]
    NormAsymmetry(String),

    #[error("matrix side {side} exceeds dense limit {limit}")]
    DenseLimitExceeded { side: usize, limit: usize },

    #[error("Kraus operators are not trace preserving (deviation {deviation:.3e})")]
    KrausIncomplete { deviation: f64 },

    #[error("no threshold in [{lo}, {hi}]")]
    NoThreshold { lo: u64, hi: u64 },

    #[error("gap is not monotone on the scanned range: gap({at}) < gap({prev})")]
    NotMonotone { prev: u64, at: u64 },

    #[error("malformed document: {0}")]
    Document(String),
}
