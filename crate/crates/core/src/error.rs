use num_complex::Complex64;
use thiserror::Error;

use crate::params::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    /// No quartic root is an admissible Stieltjes transform value at `z`.
    #[error("no admissible Stieltjes root at z = {z}")]
    NoValidRoot { z: Complex64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
