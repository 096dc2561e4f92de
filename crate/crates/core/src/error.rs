use std::fmt;

use crate::confusion::Orientation;

/// Row or column of a matrix, used when reporting a stochastic-sum violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{axis} {index} sums to {sum:.12} (expected 1 within {tol:e})")]
    NonStochastic {
        axis: Axis,
        index: usize,
        sum: f64,
        tol: f64,
    },

    #[error("matrix is singular: |det| = {det:e} is below {threshold:e}")]
    Singular { det: f64, threshold: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("column {col} has zero total count")]
    ZeroColumn { col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected a {expected} confusion matrix, got a {found} one")]
    OrientationMismatch {
        expected: Orientation,
        found: Orientation,
    },

    #[error("weak label {label} has no samples and smoothing is zero")]
    EmptyWeakClass { label: usize },

    #[error("weak label {label} has zero marginal probability")]
    ZeroWeakLabelMass { label: usize },

    #[error("clipping left no positive mass (total after clip = {total:e})")]
    AllNonPositive { total: f64 },

    #[error("not a probability vector: {0}")]
    InvalidPmf(String),

    #[error("log-log fit is degenerate: {0}")]
    DegenerateFit(&'static str),

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for numerical/domain failures, false for I/O and parse failures.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
