use thiserror::Error;

/// Errors surfaced by the CLI, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Deployment or UE placement failed (exit 3).
    #[error("generation error: {0}")]
    Generation(String),
    /// A numerical routine failed (exit 4).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Output could not be written (exit 1).
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Generation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<dnaga::Error> for CliError {
    fn from(e: dnaga::Error) -> Self {
        use dnaga::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter { .. } | E::CellIndex { .. } | E::Csv(_) | E::EmptySamples => CliError::Config(msg),
            E::Generation { .. } | E::EmptyRegion { .. } => CliError::Generation(msg),
            E::Domain { .. } | E::FitFailed { .. } | E::Numerical(_) => CliError::Numerical(msg),
            E::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
