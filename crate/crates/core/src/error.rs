use thiserror::Error;

/// Errors raised anywhere in the simulator and benchmarking stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("width mismatch: expected {expected} qubits, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("qubit {0} used more than once")]
    DuplicateIndex(usize),

    #[error("invalid noise parameters: {0}")]
    InvalidParams(String),

    #[error("unknown noise level {0} (expected 0..=3)")]
    UnknownLevel(u8),

    #[error("value {0} out of range")]
    OutOfRange(f64),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("no sequence of depth <= {depth} reaches error {eps} (best {best:e})")]
    SearchExhausted { depth: usize, eps: f64, best: f64 },

    #[error("hard cycles {0} and {1} are adjacent")]
    NotInterleaved(usize, usize),

    #[error("fit diverged (residual {0:e})")]
    FitDiverged(f64),

    #[error("ideal probability of outcome {0} is zero")]
    ZeroIdealProbability(usize),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
