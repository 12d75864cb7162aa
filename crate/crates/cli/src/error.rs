use std::fmt;
use std::path::Path;

use dispinn::dynamics::DynamicsError;
use dispinn::linalg::LinalgError;
use dispinn::neural::NeuralError;
use dispinn::pinn::PinnError;
use dispinn::rom::RomError;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration, unknown ids, unreadable files: exit 2.
    Config(String),
    /// Solver, reduction or training failure: exit 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn file(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Config(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PinnError> for CliError {
    fn from(e: PinnError) -> Self {
        match e {
            PinnError::Config(_) | PinnError::Io(_) => CliError::Config(e.to_string()),
            PinnError::Dynamics(d) => d.into(),
            PinnError::Rom(r) => r.into(),
            PinnError::Neural(n) => n.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Param(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<RomError> for CliError {
    fn from(e: RomError) -> Self {
        match e {
            RomError::Rank { .. } | RomError::Metadata(_) | RomError::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::Checkpoint(_) | NeuralError::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Io(_) | LinalgError::Parse { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
