use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data, located as precisely as possible.
    #[error("{}: {message}", location(path, *line, column.as_deref()))]
    Input {
        path: PathBuf,
        line: Option<u64>,
        column: Option<String>,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge: {0}")]
    Eigen(String),

    #[error(
        "rotation optimization failed for C={c}: no descent step after {halvings} halvings \
         (cost {cost}, gradient norm {grad_norm:.3e})"
    )]
    Convergence {
        c: usize,
        cost: f64,
        grad_norm: f64,
        halvings: u32,
    },

    #[error("candidate C={c}: {source}")]
    Candidate {
        c: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("silhouette is undefined for a single cluster")]
    SingleCluster,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(path: &std::path::Path, line: Option<u64>, column: Option<&str>) -> String {
    let mut s = path.display().to_string();
    if let Some(line) = line {
        s.push_str(&format!(" line {line}"));
    }
    if let Some(column) = column {
        s.push_str(&format!(" column `{column}`"));
    }
    s
}

impl Error {
    pub(crate) fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Input {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Degenerate(_)
            | Error::Eigen(_)
            | Error::Convergence { .. }
            | Error::SingleCluster => true,
            Error::Candidate { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
