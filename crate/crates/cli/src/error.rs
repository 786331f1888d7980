use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Library(#[from] hbridge::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Invalid input exits with 2; failures while running an experiment
    /// exit with 1 like a failed assertion.
    pub fn exit_code(&self) -> u8 {
        use hbridge::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Library(
                E::Domain(_) | E::Parse(_) | E::TimeOrdering(_) | E::MissingGridPoint(_) | E::MeasureMismatch(_),
            ) => 2,
            CliError::Library(_) | CliError::Io(_) => 1,
        }
    }
}
