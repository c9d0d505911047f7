use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),

    #[error("scale {requested} is below the resolution floor {floor} (twice the sampling resolution)")]
    BelowResolution { requested: f64, floor: f64 },

    #[error("{what} needs {needed:.3e} but the budget is {budget:.3e}; {suggestion}")]
    BudgetExceeded { what: &'static str, needed: f64, budget: f64, suggestion: String },

    #[error("tail tolerance {eps_tail} is unreachable with the tabulated tail; it needs a window of {required} × R")]
    TailUnreachable { eps_tail: f64, required: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("fast summation audit failed: max deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    AuditFailed { deviation: f64, tolerance: f64 },

    #[error("band radius {band} × R = {needed:.3} exceeds the block (2πN = {available:.3})")]
    BandExceedsBlock { band: f64, needed: f64, available: f64 },

    #[error("spatial grid too coarse: spacing {spacing:.3e}, need at most {required:.3e}")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("no geometry report at delta = {0}")]
    MissingGeometry(f64),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
