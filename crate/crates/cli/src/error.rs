use std::fmt;

/// Failure classes of a run, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration. Nothing is written.
    Schema(String),
    /// A stage failed while running.
    Runtime(String),
}

impl CliError {
    pub fn schema(e: impl fmt::Display) -> Self {
        CliError::Schema(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crib_core::Error> for CliError {
    fn from(e: crib_core::Error) -> Self {
        CliError::runtime(e)
    }
}
