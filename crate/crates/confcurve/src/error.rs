//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter outside the model's open domain.
    #[error("parameter {value} outside the domain ({lo}, {hi}) of {what}")]
    Domain { what: &'static str, value: f64, lo: f64, hi: f64 },

    /// A 1-D optimizer failed to converge; carries the best iterate seen.
    #[error("optimizer failed for {what}: {msg} (best iterate {best}, objective {objective})")]
    Optimizer { what: &'static str, msg: String, best: f64, objective: f64 },

    /// No exact estimator CDF and no Monte Carlo estimate attached.
    #[error("estimator CDF unavailable for model `{model}`")]
    EstimatorCdfUnavailable { model: &'static str },

    /// Calibration has no information at the requested parameter value.
    #[error("calibration unavailable at theta = {theta}")]
    CalibrationUnavailable { theta: f64 },

    /// A monotonicity contract of the model was violated on a probed grid.
    #[error("model violation: {msg}")]
    ModelViolation { msg: String },

    /// Estimated median function not increasing beyond the isotonization margin.
    #[error("median function not monotone at node {node} (violation {violation:.3e}, margin {margin:.3e}); increase replicates")]
    NonMonotoneMedian { node: usize, violation: f64, margin: f64 },

    /// H(theta) failed its monotonicity probe, so the curve is irregular.
    #[error("confidence curve irregular: {msg}")]
    IrregularCurve { msg: String },

    /// Too many replicates produced a non-finite statistic.
    #[error("statistic returned NaN on {count} of {total} replicates (> {} allowed)", crate::mc::MAX_INVALID_FRACTION)]
    TooManyInvalid { count: usize, total: usize },

    /// Too many grid nodes failed during a Monte Carlo pipeline.
    #[error("only {ok} of {total} grid nodes succeeded (need >= {required})")]
    TooManyFailedNodes { ok: usize, total: usize, required: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
