use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Pipeline stage of the kernel reconstruction, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    KnownTerms,
    WTail,
    ETargets,
    Basis,
    WHead,
    UnknownPart,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::KnownTerms => "known-terms",
            Stage::WTail => "w-tail",
            Stage::ETargets => "e-targets",
            Stage::Basis => "basis",
            Stage::WHead => "w-head",
            Stage::UnknownPart => "unknown-part",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The solution left the floating point range, typically for large `|Im λ|`.
    #[error("numeric range exceeded at lambda = {re} + {im}i")]
    NumericRange { re: f64, im: f64 },

    #[error("ill-conditioned system (condition estimate {condition:e}, limit {limit:e})")]
    Conditioning { condition: f64, limit: f64 },

    /// Data that cannot come from a kernel continuing the known part.
    #[error("data inconsistent with the known part: residual {residual:e} exceeds {tolerance:e}")]
    InconsistentData { residual: f64, tolerance: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last mismatch {:e})", history.last().copied().unwrap_or(f64::NAN))]
    Convergence { iterations: usize, history: Vec<f64> },

    #[error("zero search failed in box k = {k}: {reason}")]
    RootSearch { k: i64, reason: String },

    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_stage(self, stage: Stage) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
