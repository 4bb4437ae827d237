use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown model kind `{0}` (expected CPDI, DPDI, CODI or CPDI_S)")]
    UnknownModel(String),

    #[error("dimension cap exceeded: {qubits} qubits requested, at most {max} supported")]
    DimensionCap { qubits: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateIndex(usize),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("non-diagonal instance: {0}")]
    NonDiagonal(String),

    #[error("instance is not of branching form: {0}")]
    NotBranching(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("engine {engine} cannot run model {model}: {reason}")]
    EngineMismatch {
        engine: String,
        model: String,
        reason: String,
    },

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
