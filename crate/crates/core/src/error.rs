use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("grids are not commensurate: {0}")]
    GridMismatch(String),

    #[error("quantity undefined for zero-energy envelope")]
    ZeroEnergy,

    #[error("step size violation: {0}")]
    StepSize(String),

    #[error("window overflow: {0}")]
    WindowOverflow(String),

    #[error("schedule violation: {0}")]
    Schedule(String),

    #[error("wrong active transition: expected {expected}, found {found}")]
    WrongTransition { expected: &'static str, found: &'static str },

    #[error("medium must be detuning-inverted before retrieval")]
    NotInverted,

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("both bin projections vanish; phase undefined")]
    DegenerateProjection,

    #[error("pulse too wide for interferometer: {0}")]
    Premise(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
