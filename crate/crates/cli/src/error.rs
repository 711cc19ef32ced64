use std::fmt;

/// Failures mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or unusable data (exit 1).
    Input(String),
    /// Flags that are individually valid but do not fit together (exit 2).
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<dextremes::Error> for CliError {
    fn from(e: dextremes::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
