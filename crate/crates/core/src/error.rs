use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),

    #[error("objects live on different spaces")]
    SpaceMismatch,

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("all weights are zero")]
    AllZero,

    #[error("negative weight {value} at point {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, not 1")]
    NotSimplex { sum: f64 },

    #[error("rate value {value} at point {index} is negative or NaN")]
    NegativeRate { index: usize, value: f64 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("sequence increases from term {term} at point {point}")]
    NotMonotone { term: usize, point: usize },

    #[error("term {term} is negative at point {point}")]
    NegativeTerm { term: usize, point: usize },

    #[error("every rate entry is infinite; the sup-form functional would be identically -inf")]
    AllInfiniteRate,

    #[error("point index {0} is not in the space")]
    PointNotInSpace(usize),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("sequence residual {residual} is too large to conclude anything about the limit")]
    SequenceNotVanishing { residual: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("the measure-level rate is infinite everywhere on the simplex")]
    InfeasibleJ,

    #[error("success probability {0} is not in (0, 1)")]
    InvalidP(f64),

    #[error("schedule has {0} entries, need at least 3")]
    ScheduleTooShort(usize),

    #[error("space has no point at infinity")]
    NotTailSpace,

    #[error("parse error{}: {message}", location(.line, .field))]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" at line {l}, field {f:?}"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(f)) => format!(" in field {f:?}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn parse(message: impl Into<String>) -> Self {
        Error::Parse {
            line: None,
            field: None,
            message: message.into(),
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "InvalidSpace",
            Error::DuplicateLabel(_) => "DuplicateLabel",
            Error::SpaceMismatch => "SpaceMismatch",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::AllZero => "AllZero",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::NotSimplex { .. } => "NotSimplex",
            Error::NegativeRate { .. } => "NegativeRate",
            Error::EmptySequence => "EmptySequence",
            Error::NotMonotone { .. } => "NotMonotone",
            Error::NegativeTerm { .. } => "NegativeTerm",
            Error::AllInfiniteRate => "AllInfiniteRate",
            Error::PointNotInSpace(_) => "PointNotInSpace",
            Error::InvalidSchedule(_) => "InvalidSchedule",
            Error::InvalidOptions(_) => "InvalidOptions",
            Error::SequenceNotVanishing { .. } => "SequenceNotVanishing",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::InfeasibleJ => "InfeasibleJ",
            Error::InvalidP(_) => "InvalidP",
            Error::ScheduleTooShort(_) => "ScheduleTooShort",
            Error::NotTailSpace => "NotTailSpace",
            Error::Parse { .. } => "ParseError",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Io(_) => "Io",
        }
    }
}
