use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] revmix::Error),
    /// One or more pipeline stages failed; the rest of the run completed.
    #[error("{} stage(s) failed: {}", .0.len(), .0.join("; "))]
    Stages(Vec<String>),
}

impl CliError {
    /// Short machine-readable tag for the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                revmix::Error::SingularityGuard { .. } => "singularity_guard",
                revmix::Error::StepBudgetExceeded { .. } => "step_budget_exceeded",
                revmix::Error::StepSizeUnderflow { .. } => "step_size_underflow",
                revmix::Error::NonFinite { .. } => "non_finite",
                revmix::Error::NoCrossingInTrajectory { .. } => "no_crossing",
                revmix::Error::WrongDirection { .. } => "wrong_direction",
                revmix::Error::NewtonDiverged { .. } => "newton_diverged",
                revmix::Error::SingularJacobian { .. } => "singular_jacobian",
                revmix::Error::BranchLost { .. } => "branch_lost",
                revmix::Error::BracketInvalid { .. } => "bracket_invalid",
                revmix::Error::GridMismatch => "grid_mismatch",
                revmix::Error::NotASaddle(_) => "not_a_saddle",
                revmix::Error::InvalidParameter(_) => "invalid_parameter",
            },
            CliError::Stages(_) => "stages",
        }
    }

    /// Exit status: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            _ => 1,
        }
    }

    /// `key = value` lines describing the error.
    pub fn record(&self) -> String {
        let mut s = format!("status = error\nkind = {}\nmessage = {}\n", self.kind(), one_line(&self.to_string()));
        if let CliError::Validation(v) | CliError::Stages(v) = self {
            for item in v {
                s.push_str(&format!("item = {}\n", one_line(item)));
            }
        }
        s
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', " ")
}
