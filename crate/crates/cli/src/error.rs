use std::io;
use std::path::Path;

use partlex::alignment::AlignError;
use partlex::library::LibraryError;
use partlex::stimgen::{CorpusIoError, GenError};
use partlex::textstats::{DescriptionIoError, StatsError};
use thiserror::Error;

/// Every failure the binary reports, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Data(String),
    /// An internal consistency check failed: a rewrite changed a picture,
    /// EM lost likelihood, a distribution did not normalize.
    #[error("{0}")]
    Oracle(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Oracle(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Oracle(_) => "oracle",
        }
    }

    /// One JSON object on one line, for scripts.
    pub fn to_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<LibraryError> for CliError {
    fn from(e: LibraryError) -> Self {
        match e {
            LibraryError::Mismatch { .. } => CliError::Oracle(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        match e {
            AlignError::NotMonotone { .. } | AlignError::NotNormalized { .. } => {
                CliError::Oracle(e.to_string())
            }
            AlignError::Library(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Template { .. } => CliError::Oracle(e.to_string()),
            GenError::Library(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CorpusIoError> for CliError {
    fn from(e: CorpusIoError) -> Self {
        CliError::Data(format!("corpus: {e}"))
    }
}

impl From<DescriptionIoError> for CliError {
    fn from(e: DescriptionIoError) -> Self {
        CliError::Data(format!("descriptions: {e}"))
    }
}
