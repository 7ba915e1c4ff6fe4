use serde::Serialize;
use thiserror::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Solver(String),

    #[error("{0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) | CliError::Io { .. } => 3,
            CliError::Invariant(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Solver(_) => "solver",
            CliError::Invariant(_) => "invariant",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Body { error: self.kind(), exit_code: self.exit_code(), message: self.to_string() })
            .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

impl From<ptdnls::Error> for CliError {
    fn from(e: ptdnls::Error) -> Self {
        use ptdnls::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParams(_)
            | E::InvalidState(_)
            | E::SizeMismatch { .. }
            | E::PtBroken { .. }
            | E::NoRealSolution { .. }
            | E::OutOfBranch { .. }
            | E::UnsupportedBranch { .. } => CliError::Validation(msg),
            E::NearBifurcation { .. }
            | E::Continuation { .. }
            | E::BlowUp { .. }
            | E::Decomposition { .. }
            | E::DegenerateDecomposition { .. } => CliError::Solver(msg),
            E::CoercivityViolation { .. } => CliError::Invariant(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
