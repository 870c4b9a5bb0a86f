use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Missing input, malformed config or input data.
    #[error("{0}")]
    Validation(String),
    /// Filters or inputs left nothing to compute.
    #[error("{0}")]
    Empty(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("{0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Empty(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Output(_) => 1,
        })
    }
}
