use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which side of a pairwise estimate a degeneracy refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    First,
    Second,
    Both,
}

impl Leg {
    pub(crate) fn from_flags(first: bool, second: bool) -> Option<Leg> {
        match (first, second) {
            (true, true) => Some(Leg::Both),
            (true, false) => Some(Leg::First),
            (false, true) => Some(Leg::Second),
            (false, false) => None,
        }
    }
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Leg::First => "first",
            Leg::Second => "second",
            Leg::Both => "both",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("Hawkes specification is {class} (spectral radius {radius:.6}); stationary required")]
    Stability { class: String, radius: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("formula domain error: {0}")]
    Domain(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero realised variance on {0} leg")]
    DegenerateVariance(Leg),

    #[error("no overlap between sampling intervals; overlap correction undefined")]
    NoOverlap,

    #[error("flat-trade probability is 1 on {0} leg; correction undefined")]
    Saturation(Leg),

    #[error("cannot rescale by saturation level {0}")]
    Scaling(f64),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
