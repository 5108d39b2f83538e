//! Error type shared by all modules of the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter triple lies outside the admissible exponent range.
    /// The message names the violated inequality.
    OutOfRegime(String),
    /// A caller-supplied value violates a documented precondition.
    InvalidParameter(String),
    /// A time value is outside the barrier's lifetime `[0, T)`.
    TimeOutOfRange { t: f64, horizon: f64 },
    /// Pointwise residual evaluation is undefined at the origin.
    OriginExcluded,
    /// A computed quantity is NaN or infinite.
    NonFinite(String),
    /// No horizon makes the supersolution dominate the requested tail.
    DominationUnattainable(String),
    /// The subsolution parameter search ran out of budget; carries the
    /// best candidate seen and its worst (largest) scan residual.
    SubSearchExhausted { a: f64, b: f64, max_residual: f64 },
    /// Discrete comparison was requested but the fields are not ordered
    /// at the initial time.
    OrderingViolated { t: f64, r: f64, gap: f64 },
    /// A rate fit was requested on a series that does not resolve the
    /// required number of decades of `t_e - t`.
    InsufficientDecades { resolved: f64, required: f64 },
    /// The time stepper produced an unusable state.
    SolveFailure { step: usize, t: f64, detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfRegime(msg) => write!(f, "parameters out of regime: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::TimeOutOfRange { t, horizon } => {
                write!(f, "time {t} outside the barrier lifetime [0, {horizon})")
            }
            Error::OriginExcluded => {
                write!(f, "residual evaluation excludes the origin r = 0")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::DominationUnattainable(msg) => {
                write!(f, "no admissible horizon dominates the tail: {msg}")
            }
            Error::SubSearchExhausted { a, b, max_residual } => write!(
                f,
                "subsolution search budget exhausted; best candidate a = {a:.6e}, b = {b:.6e} \
                 with max scan residual {max_residual:.6e}"
            ),
            Error::OrderingViolated { t, r, gap } => write!(
                f,
                "initial ordering violated at t = {t:.6e}, r = {r:.6e} (gap {gap:.6e})"
            ),
            Error::InsufficientDecades { resolved, required } => write!(
                f,
                "fit window resolves {resolved:.2} decades, {required:.2} required"
            ),
            Error::SolveFailure { step, t, detail } => {
                write!(f, "solver failure at step {step}, t = {t:.6e}: {detail}")
            }
        }
    }
}

impl std::error::Error for Error {}
