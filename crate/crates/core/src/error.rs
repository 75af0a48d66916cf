use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by curve construction, geometry and the flow integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid resolution {0}: need a power of two, at least 16")]
    InvalidResolution(usize),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("degenerate curve: consecutive nodes {0} and {1} coincide")]
    Degenerate(usize, usize),
    #[error("curve is under-resolved: relative tail energy {tail:.3e} exceeds {limit:.0e}")]
    Underresolved { tail: f64, limit: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("derivative order {order} out of range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },
    #[error("winding {0} is not close to an integer")]
    NonIntegerWinding(f64),
    #[error("time {t} is at or beyond extinction time {extinction}")]
    Extinction { t: f64, extinction: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stop condition already met on the initial curve: {0}")]
    InitialStop(&'static str),
    #[error("audit window contaminated: {0}")]
    Window(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("reference run stopped ({status}) at t = {t} before the last sample time {needed}")]
    ReferenceStopped {
        status: String,
        t: f64,
        needed: f64,
    },
    #[error("run with epsilon {epsilon} stopped ({status}) at t = {t} before the last sample time {needed}")]
    RunStopped {
        epsilon: f64,
        status: String,
        t: f64,
        needed: f64,
    },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what, value })
    }
}

pub(crate) fn ensure_non_negative(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Negative { what, value })
    }
}
