use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map line {line}: {message}")]
    MapParse { line: usize, message: String },

    #[error("map has no navigable cells")]
    EmptyWater,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field is constant over the water cells (min = max = {0})")]
    DegenerateField(f64),

    #[error("GP system is not positive definite after jitter ({samples} samples)")]
    NumericalFailure { samples: usize },

    #[error("GP model has no training samples")]
    EmptySamples,

    #[error("guidance requires a fitted GP model")]
    UnfittedModel,

    #[error("no action zones")]
    NoZones,

    #[error("sample from vehicle {vehicle} routed to zone {zone}, which it is not assigned to")]
    Routing { vehicle: usize, zone: usize },

    #[error("aggregation needs at least 2 reports, got {0}")]
    InsufficientReports(usize),

    #[error("grid contains a non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mission (planner {planner}, seed {seed}): {source}")]
    Mission {
        planner: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
