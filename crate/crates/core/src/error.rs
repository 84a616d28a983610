use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian: max asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("local state {party} is not normalized (|<a|a> - 1| = {deviation:.3e})")]
    NotNormalized { party: usize, deviation: f64 },

    #[error("state vector is not normalized (|<psi|psi> - 1| = {deviation:.3e})")]
    StateNotNormalized { deviation: f64 },

    #[error("party index {index} out of range for {parties} parties")]
    PartyIndex { index: usize, parties: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigNoConvergence { sweeps: usize },

    #[error("step size {dt:.3e} exceeds the stability limit {limit:.3e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("time grid must be non-empty and strictly ascending")]
    BadTimeGrid,

    #[error("density operator lost positivity: eigenvalue {min_eigenvalue:.3e}")]
    PositivityLost { min_eigenvalue: f64 },

    #[error("malformed series: {0}")]
    MalformedSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
