use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One problem found while parsing or validating a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, when the issue can be tied to one.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("operator is not elliptic: {0}")]
    NotElliptic(String),

    #[error("measure has atoms where none are allowed: {0}")]
    AtomsPresent(String),

    #[error("infinite target capacity: the hole construction needs a finite cube mass")]
    InfiniteTarget,

    #[error("degenerate capacitary potential: outer distribution has zero mass")]
    DegeneratePotential,

    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Geometry(_)
            | Error::UnderResolved(_)
            | Error::NotElliptic(_)
            | Error::AtomsPresent(_)
            | Error::InfiniteTarget
            | Error::Config(_) => 1,
            Error::DegeneratePotential | Error::NonConvergence { .. } => 2,
            Error::Io { .. } | Error::Json(_) => 3,
        }
    }
}
