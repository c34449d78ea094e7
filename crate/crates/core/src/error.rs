use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsvdError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("gate is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("decomposition failed to converge: {0}")]
    NoConvergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QsvdError>;

pub(crate) fn invalid(msg: impl Into<String>) -> QsvdError {
    QsvdError::InvalidArgument(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> QsvdError {
    QsvdError::Dimension(msg.into())
}
