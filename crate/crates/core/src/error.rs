use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("density has zero total mass")]
    ZeroMass,
    #[error("negative entry {value} at cell {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("length {got} does not match grid with {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("map is not monotone at cell {0}")]
    NonMonotoneMap(usize),
    #[error("image of the map leaves the grid at cell {0}")]
    ImageEscapesGrid(usize),
    #[error("source density vanishes on cell {0} inside its support")]
    DegenerateSupport(usize),
    #[error("potential kind {got} used where {expected} is required")]
    KindMismatch { expected: &'static str, got: &'static str },
    #[error("inner solver stalled at step {step}: stationarity {stationarity:e}")]
    InnerSolverStalled { step: usize, stationarity: f64 },
    #[error("mass {escaped:e} within the boundary margin at step {step}")]
    BoundaryEscape { step: usize, escaped: f64 },
    #[error("time {t} outside [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },
    #[error("trajectory has {got} steps, at least {need} required")]
    TooFewSteps { got: usize, need: usize },
    #[error("heat step produced an invalid state")]
    HeatStepUnstable,
    #[error("time window [{0}, {1}] not supported by the trajectory")]
    UnsupportedWindow(f64, f64),
    #[error("perturbation id + eps*zeta is not monotone for eps = {0}")]
    NonMonotonePerturbation(f64),
    #[error("finite-volume step size collapsed at t = {0}")]
    StabilityViolation(f64),
    #[error("finite-volume positivity clip removed {0:e} mass")]
    NegativityClipExceeded(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
