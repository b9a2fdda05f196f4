use std::fmt;

/// Failures of a run, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Invariant(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gravfringe::Error> for CliError {
    fn from(e: gravfringe::Error) -> Self {
        use gravfringe::Error as E;
        match e {
            E::NonConvergent { .. } | E::TruncationUnconverged { .. } => CliError::Numerical(e.to_string()),
            E::InsufficientFringes { .. } => CliError::Invariant(e.to_string()),
            E::InvalidParameter(_)
            | E::SingularConfiguration { .. }
            | E::UnsupportedConfiguration(_)
            | E::NotACrossing { .. } => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Fail with exit code 4 unless `condition` holds.
pub fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if condition {
        Ok(())
    } else {
        Err(CliError::Invariant(message()))
    }
}
