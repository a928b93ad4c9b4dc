use thiserror::Error;

/// Errors raised by the modelling, integration and criteria layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("eigenvalue {value} at position {index} is not positive (operator must be coercive)")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("domain length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation needs a spatial grid but the operator has no geometry")]
    MissingGeometry,
    #[error("region ({start}, {end}) is not a subinterval of (0, {length})")]
    InvalidRegion { start: f64, end: f64, length: f64 },
    #[error("feedback slopes out of order: lower {lower} > upper {upper}")]
    SlopeOrder { lower: f64, upper: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("time {t} lies outside the schedule horizon [{start}, {end})")]
    OutOfHorizon { t: f64, start: f64, end: f64 },
    #[error("delay must be positive in delayed mode, got {0}")]
    NonPositiveDelay(f64),
    #[error("history buffer needs at least one slot interval (M >= 1)")]
    EmptyHistory,
    #[error("history samples: expected {expected} velocity vectors, got {found}")]
    HistorySamples { expected: usize, found: usize },
    #[error("history does not cover [{start}, {end}] (buffer spans [{have_start}, {have_end}])")]
    HistoryGap {
        start: f64,
        end: f64,
        have_start: f64,
        have_end: f64,
    },
    #[error("time step {dt} does not evenly divide the history spacing {spacing}")]
    DelayAlignment { dt: f64, spacing: f64 },
    #[error("time step {dt} violates the explicit stability guard dt < {limit}")]
    StabilityGuard { dt: f64, limit: f64 },
    #[error("horizon {horizon} is not an integer multiple of the time step {dt}")]
    HorizonAlignment { horizon: f64, dt: f64 },
    #[error("time step must be nonzero and finite, got {0}")]
    InvalidStep(f64),
    #[error("no trace sample at interval endpoint t = {t}")]
    MissingEndpointSample { t: f64 },
    #[error("lower bound {lower} exceeds upper bound {upper}")]
    BoundOrder { lower: f64, upper: f64 },
    #[error("sequence family is malformed: {0}")]
    UnsupportedFamily(String),
    #[error("theorem {theorem} needs the constant `{name}`")]
    MissingConstant { theorem: &'static str, name: &'static str },
    #[error("trial {trial} starts from zero energy")]
    DegenerateTrial { trial: usize },
    #[error("schedule is invalid: {0}")]
    InvalidSchedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
