use std::path::PathBuf;

use thiserror::Error;

use crate::fock::ComplexPoint;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("basis mismatch: left is (n={left_n}, D={left_degree}), right is (n={right_n}, D={right_degree})")]
    BasisMismatch {
        left_n: usize,
        left_degree: u32,
        right_n: usize,
        right_degree: u32,
    },

    #[error("unsupported complex dimension {0} (supported: 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree overflow: {what} needs degree {needed}, basis holds {available}")]
    DegreeOverflow {
        what: &'static str,
        needed: u32,
        available: u32,
    },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("quadrature order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("integrand is not finite at node {index} ({point})")]
    NonFiniteIntegrand { index: usize, point: ComplexPoint },

    #[error("symbol and quadrature rule are incompatible: {0}")]
    IncompatibleRule(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("truncated kernel at {point} keeps only {retained:.3e} of its mass at D={degree}; use a larger degree")]
    KernelUnderflow {
        point: ComplexPoint,
        retained: f64,
        degree: u32,
    },

    #[error("non-positive Schur weight {value} at lattice index {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("negative lattice kernel value {value} at ({row}, {col})")]
    NegativeKernel { row: usize, col: usize, value: f64 },

    #[error("displacement |u - gamma(u)| = {distance} exceeds the bound {bound} at lattice index {index}")]
    DisplacementViolation {
        index: usize,
        distance: f64,
        bound: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
