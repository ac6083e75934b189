use crate::ball::FeasibilityCase;

/// Errors raised by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Lipschitz constant must be positive, got {0}")]
    NonPositiveLipschitz(f64),

    /// A violated constraint whose gradient vanishes at the query point. For a
    /// convex constraint with a nonempty zero sublevel set this cannot happen,
    /// so it points at an infeasible or degenerate constraint model.
    #[error("{} is violated (h = {value:e}) but its gradient vanishes", describe_constraint(*.index))]
    DegenerateConstraint { index: Option<usize>, value: f64 },

    #[error("ball is empty (radius_sq = {0:e})")]
    EmptyBall(f64),

    #[error("operation requires a violated constraint with a nonempty ball, found {0:?}")]
    NotNonemptyBall(FeasibilityCase),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Data(String),

    #[error("rate fit needs at least {needed} points in the window, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("missing reference: {0}")]
    MissingReference(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn describe_constraint(index: Option<usize>) -> String {
    match index {
        Some(i) => format!("constraint {i}"),
        None => "constraint".to_string(),
    }
}

impl Error {
    /// Attaches a constraint index to errors raised by index-agnostic code.
    pub fn with_constraint(self, index: usize) -> Self {
        match self {
            Error::DegenerateConstraint { value, .. } => Error::DegenerateConstraint {
                index: Some(index),
                value,
            },
            other => other,
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
