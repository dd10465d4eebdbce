use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown geometry `{name}`; valid keys: {valid}")]
    UnknownGeometry { name: String, valid: String },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("time {t} is at or past the closed-form singular time {singular_time}")]
    PastSingularTime { t: f64, singular_time: f64 },

    #[error("radius {r} exceeds the diameter {diameter} of the compact space form")]
    RadiusBeyondDiameter { r: f64, diameter: f64 },

    #[error("radius {r} is not an interior point of the profile grid")]
    OutsideGrid { r: f64 },

    #[error("{what}: need at least {needed} samples, got {got}")]
    InsufficientSamples {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate estimation window: {0}")]
    DegenerateWindow(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Configuration problems exit with 1, everything else is a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownGeometry { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
