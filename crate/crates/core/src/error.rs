use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
///
/// Scalar payloads are widened to `f64` so the error type is not generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("R = {r} fell below the singularity guard R_min = {r_min}")]
    SingularityGuard { r: f64, r_min: f64 },
    #[error("step budget of {max_steps} steps exceeded")]
    StepBudgetExceeded { max_steps: usize },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory does not reach phi = {target}")]
    NoCrossingInTrajectory { target: f64 },
    #[error("section crossed in the wrong direction (phi_dot = {phi_dot})")]
    WrongDirection { phi_dot: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular Newton Jacobian (|det| = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("branch lost at parameter {param}: {reason}")]
    BranchLost { param: f64, reason: String },
    #[error("invalid bracket [{lo}, {hi}]: predicate has the same value at both ends")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("occupancy grids differ in window or resolution")]
    GridMismatch,
    #[error("point is not a saddle: {0}")]
    NotASaddle(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
