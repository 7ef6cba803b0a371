use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in parameter vector")]
    NonFinite,
    #[error("temperature {0} outside [0, 1]")]
    Temperature(f64),
    #[error("invalid prior: {0}")]
    InvalidPrior(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("enumeration over {size} binary variables exceeds the limit of {max}")]
    EnumerationTooLarge { size: usize, max: usize },
    #[error("column height {height} exceeds the transfer limit of {max}")]
    TransferTooLarge { height: usize, max: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("grid does not cover the posterior: boundary mass ratio {ratio:e} > {tolerance:e}")]
    GridCoverage { ratio: f64, tolerance: f64 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("degenerate sample: zero spread in dimension {0}")]
    DegenerateSample(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("requested {requested} draws but only {available} were retained")]
    NotEnoughDraws { requested: usize, available: usize },
    #[error("invalid temperature ladder: {0}")]
    InvalidLadder(&'static str),
    #[error("missing auxiliary statistics for chain {0}")]
    MissingAuxStats(usize),
    #[error("empty input")]
    Empty,
    #[error("no reference-table draw accepted at tolerance {0}")]
    NoneAccepted(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("statistic vector is missing the nested extra statistic")]
    MissingStatistic,
}
