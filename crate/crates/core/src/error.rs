use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("event {index} at ({x}, {y}) is outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    #[error("clip shorter than one frame ({duration_us} us < dt {dt_us} us)")]
    ClipTooShort { duration_us: u64, dt_us: u32 },
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("degenerate scene: {0}")]
    DegenerateScene(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: String, found: String },
    #[error("value {value} at flat index {index} is outside [0, 1]")]
    ValueRange { index: usize, value: f64 },
    #[error("probabilities at pixel {pixel} of frame {frame} sum to {sum}")]
    Simplex { frame: usize, pixel: usize, sum: f64 },
    #[error("no measurable frames")]
    NoMeasurableFrames,
    #[error("no impact detected")]
    NoImpactDetected,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("clip {clip} has {count} annotations, at least 2 required")]
    TooFewAnnotations { clip: usize, count: usize },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(expected: impl core::fmt::Display, found: impl core::fmt::Display) -> Self {
        use alloc::string::ToString;
        Error::Dimension {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
