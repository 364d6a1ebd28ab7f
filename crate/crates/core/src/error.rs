use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("binary exponent overflow: {0}")]
    ExponentOverflow(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Radius beyond the certified truncation radius of a series.
    #[error("radius {radius} exceeds guaranteed radius {guaranteed} ({n_terms} terms); rebuild with more terms")]
    Truncation {
        radius: f64,
        guaranteed: f64,
        n_terms: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A zero of the function lies too close to the circle |z| = r.
    #[error("zero too close to |z| = {radius}; retry with r = {suggested:?}")]
    ZeroNearContour { radius: f64, suggested: [f64; 2] },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
