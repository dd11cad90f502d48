use std::path::PathBuf;

/// Errors produced by the campaign-lens pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Domain string could not be parsed into labels + public suffix.
    #[error("invalid domain {domain:?}: {reason}")]
    DomainParse { domain: String, reason: String },

    /// Configuration file or value is invalid. Mapped to exit code 2 by the CLI.
    #[error("config error ({key}): {reason}")]
    Config { key: String, reason: String },

    /// A line of an input file failed to parse.
    #[error("{path}:{line}: {reason}")]
    Record {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    /// A numeric precondition was violated (degenerate column, k out of range, ...).
    #[error("{0}")]
    Numeric(String),

    /// A pipeline stage could not run because an upstream artifact is missing.
    #[error("stage {stage}: missing upstream artifact: {what}")]
    MissingArtifact { stage: String, what: String },

    /// A pipeline stage failed; carries the stage name for the CLI exit message.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("fixture for {domain} not found under {dir}")]
    FixtureMissing { domain: String, dir: PathBuf },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn record(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Record {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True when the error (or its stage wrapper) is a configuration problem.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
