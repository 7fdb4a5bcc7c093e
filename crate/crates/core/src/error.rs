//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where a formula is defined.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("index out of range: {what} {index} (size {size})")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },

    /// Even the full resource budgets cannot bring every listed MU to QoE >= 0.
    #[error("ASP {asp} cannot satisfy the QoE floor for MUs {mus:?}{}", scheme_suffix(.scheme))]
    Infeasible {
        asp: usize,
        mus: Vec<usize>,
        scheme: Option<String>,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("problem too large for exhaustive search: {0}")]
    Size(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

fn scheme_suffix(scheme: &Option<String>) -> String {
    match scheme {
        Some(s) => format!(" under scheme {s}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a scheme name to an infeasibility error; other errors pass through.
    pub fn with_scheme(self, name: &str) -> Self {
        match self {
            Error::Infeasible { asp, mus, .. } => Error::Infeasible {
                asp,
                mus,
                scheme: Some(name.to_string()),
            },
            other => other,
        }
    }
}
