use std::fmt;

/// CLI failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values. Exit code 2.
    Validation(String),
    /// A computation did not produce a usable result. Exit code 3.
    Numerical(String),
    /// Reading or writing files. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<afrelay::Error> for CliError {
    fn from(e: afrelay::Error) -> Self {
        match e {
            afrelay::Error::InvalidConfig(_) | afrelay::Error::Domain(_) => CliError::Validation(e.to_string()),
            afrelay::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
