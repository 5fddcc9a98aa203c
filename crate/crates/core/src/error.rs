use alloc::string::String;

use crate::closed_loop::PGains;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid size for {what}: got {got}, need at least {min}")]
    InvalidSize {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is not connected")]
    Disconnected,

    /// F-DPD with `tau = 0` is ideal PD control, which is P control with
    /// `g0 = K_D`. Callers should use the carried gains instead.
    #[error("tau = 0 is ideal PD control; use P control with g0 = K_D")]
    IdealPdRedirect { equivalent: PGains },

    #[error("variance is unbounded: mode {mode} is marginal")]
    UnboundedVariance { mode: usize },

    #[error("system is not Hurwitz (mode {mode:?})")]
    Unstable { mode: Option<usize> },

    #[error("marginal mode is observable from the output")]
    ObservableMarginalMode,

    #[error("numerical failure: {0}")]
    Numerical(&'static str),

    #[error("system with {n} nodes exceeds the oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("no finite objective value in [0, {bracket_hi}]")]
    Search { bracket_hi: f64 },

    #[error("search did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("step size {dt} too large: dt * max|Re xi| = {ratio}")]
    StepSize { dt: f64, ratio: f64 },

    #[error("averaging window after burn-in is empty")]
    EmptyWindow,

    #[error("exponent fit needs {required} finite points in the window, got {found}")]
    Fit { found: usize, required: usize },
}
