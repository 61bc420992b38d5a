use momsl::error::Error as LibError;

/// CLI-level failure, carrying the process exit code.
///
/// Exit codes: 2 for anything the user can fix by changing flags, config
/// syntax, or input files; 3 for structurally valid requests the data cannot
/// support (block schedules beyond n, too few distinct x values for a rate
/// fit); 1 for runtime failures such as I/O and solver divergence.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::InvalidInput(_) | LibError::Parse { .. } => CliError::Usage(e.to_string()),
            LibError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            LibError::Diverged { .. } | LibError::NotRecorded(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
