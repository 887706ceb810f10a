use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Sampler(#[from] ars_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl BenchError {
    /// Process exit code: 1 configuration, 2 runtime, 3 validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Sampler(_) | BenchError::Io(_) => 2,
            BenchError::Validation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
