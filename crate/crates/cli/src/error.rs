use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] nlbs_core::Error),

    /// A residual gate exceeded its tolerance; the report was still written.
    #[error("{0}")]
    GateFailed(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_domain() => 3,
            CliError::Core(_) => 2,
            CliError::GateFailed(_) => 3,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }
}
