use alloc::string::String;

/// Errors raised by the estimators and their numerical building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("log-partition overflow at theta = {0}")]
    LogPartitionOverflow(f64),
    #[error("degenerate support [{lo}, {hi}]")]
    DegenerateSupport { lo: f64, hi: f64 },
    #[error("zero base measure at y = {0}")]
    ZeroBaseMeasure(f64),
    #[error("empty kernel neighborhood at t = {0}")]
    EmptyNeighborhood(f64),
    #[error("vanishing density estimate at t = {0}")]
    VanishingDensity(f64),
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("isolated y = {0}")]
    IsolatedY(f64),
    #[error("lfc overflow at y = {0}")]
    LfcOverflow(f64),
    #[error("density floor in standardization at observation {0}")]
    DensityFloor(usize),
    #[error("objective infeasible everywhere")]
    Infeasible,
    #[error("all data missing")]
    AllMissing,
    #[error("g1 overflow at y = {0}")]
    G1Overflow(f64),
    #[error("integral vanishes: {0}")]
    ZeroIntegral(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
