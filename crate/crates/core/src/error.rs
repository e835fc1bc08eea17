use thiserror::Error;

use crate::airlink::Stage;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline step that produced an estimation failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    SymbolErasure,
    ClutterSuppression,
    Pitch,
    Horizontal,
    Distance,
    VirtualVelocity,
    PlaneFit,
    VelocityRecovery,
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Step::SymbolErasure => "symbol erasure",
            Step::ClutterSuppression => "clutter suppression",
            Step::Pitch => "pitch estimation",
            Step::Horizontal => "horizontal estimation",
            Step::Distance => "distance estimation",
            Step::VirtualVelocity => "virtual-velocity estimation",
            Step::PlaneFit => "plane fit",
            Step::VelocityRecovery => "velocity recovery",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target distance {r} m is not positive at symbol {n}")]
    NonPositiveRange { r: f64, n: usize },

    #[error("target coincides with antenna at the array origin")]
    TargetAtOrigin,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("tensor stage is {got:?}, operation requires {expected}")]
    WrongStage { expected: &'static str, got: Stage },

    #[error("symbol at (n={n}, m={m}) is zero")]
    ZeroSymbol { n: usize, m: usize },

    #[error("need at least {needed} symbols, got {got}")]
    TooFewSymbols { needed: usize, got: usize },

    #[error("empty eigenvalue list")]
    EmptyEigenvalues,

    #[error("no target detected (model order 0)")]
    NoTarget,

    #[error("rotation sub-block is singular for model order {order}")]
    SingularRotation { order: usize },

    #[error("array length {len} too short for model order {order}")]
    ArrayTooShort { len: usize, order: usize },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("spatial direction estimate {value} outside [-1, 1]")]
    SddOutOfRange { value: f64 },

    #[error("{0} is unobservable at this geometry")]
    Unobservable(&'static str),

    #[error("degenerate plane-fit design along {axis}")]
    DegenerateDesign { axis: &'static str },

    #[error("{step} failed: {source}")]
    Step {
        step: Step,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(self, step: Step) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// The innermost error, with step wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn step(&self) -> Option<Step> {
        match self {
            Error::Step { step, .. } => Some(*step),
            _ => None,
        }
    }
}
