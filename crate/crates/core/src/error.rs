use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource error: {context}: {source}")]
    Resource {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("batch {batch} failed: {source}")]
    Batch {
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("partial pipeline state in {}: {reason} (rerun with --force to overwrite)", dir.display())]
    PartialState { dir: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn resource(context: impl Into<String>, source: io::Error) -> Self {
        Error::Resource {
            context: context.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 usage/config, 2 data, 3 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::PartialState { .. } => 1,
            Error::Parse { .. } | Error::Integrity(_) | Error::Data(_) | Error::Contract(_) => 2,
            Error::Resource { .. } => 3,
            Error::Io { source, .. } => match source.kind() {
                io::ErrorKind::NotFound => 1,
                io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof => 2,
                _ => 3,
            },
            Error::Batch { source, .. } => source.exit_code(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::resource("csv stream", source),
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => Error::parse(line, format!("expected {expected_len} columns, found {len}")),
            csv::ErrorKind::Utf8 { err, .. } => Error::parse(line, format!("invalid UTF-8: {err}")),
            other => Error::parse(line, format!("{other:?}")),
        }
    }
}
