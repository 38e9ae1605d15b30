use std::path::PathBuf;

use thiserror::Error;

use crate::netmodel::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid network: {}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("area {area} is infeasible: required adjustment {required:.6} pu outside [{lower:.6}, {upper:.6}]")]
    InfeasibleArea {
        area: usize,
        required: f64,
        lower: f64,
        upper: f64,
    },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("state diverged at t = {time:.4} s")]
    Diverged { time: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certificate: {0}")]
    Certificate(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Domain failures (infeasible, diverged, certificate rejected) as opposed
    /// to usage or I/O problems.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Parse { .. } | Error::Config(_))
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
