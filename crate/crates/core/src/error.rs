use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("slot ({i}, {j}) lies outside the operator window: {reason}")]
    SlotOutsideWindow { i: i64, j: i64, reason: String },

    #[error("quadrature under-resolved: {0}")]
    Underresolved(String),

    #[error("mismatched coherent-state widths ({0} vs {1})")]
    WidthMismatch(f64, f64),

    #[error("stability guard violated: dt*E_max/hbar = {ratio:.3} >= 0.5; reduce dt below {max_dt:.3e}")]
    Stability { ratio: f64, max_dt: f64 },

    #[error("CFL guard violated: {ratio:.3} >= 0.5; reduce dt below {max_dt:.3e}")]
    Cfl { ratio: f64, max_dt: f64 },

    #[error("probability {mass:.3e} reached the {edge} edge of the simulation window")]
    BoundaryReached { mass: f64, edge: &'static str },

    #[error("characteristic left the bounding box at t = {t:.6}")]
    Escaped { t: f64 },

    #[error("empty probability distribution")]
    EmptyDistribution,

    #[error("partition mismatch between compared distributions")]
    PartitionMismatch,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero denominator in Ehrenfest bound")]
    ZeroDenominator,

    #[error("missing field: {0}")]
    MissingField(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unsupported schema `{found}` (expected major {expected})")]
    Schema { found: String, expected: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures caused by numerical guards rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Stability { .. }
                | Error::Cfl { .. }
                | Error::BoundaryReached { .. }
                | Error::Escaped { .. }
                | Error::Underresolved(_)
                | Error::EmptyDistribution
        )
    }
}
