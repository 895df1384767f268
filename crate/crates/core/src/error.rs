use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the pipeline can report. `code()` yields the stable
/// kebab-case identifier used by the CLI, the review service and the C ABI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("roi-exceeds-image: window side {side} does not fit in {width}x{height}")]
    RoiExceedsImage { side: usize, width: usize, height: usize },

    #[error("seed-out-of-bounds: ({row}, {col})")]
    SeedOutOfBounds { row: usize, col: usize },

    #[error("unreviewed-roi: {0}")]
    UnreviewedRoi(String),

    #[error("bad-selection: {0}")]
    BadSelection(String),

    #[error("degenerate-mask: {0}")]
    DegenerateMask(String),

    #[error("displacement-too-large: d={distance} on {width}x{height}")]
    DisplacementTooLarge { distance: usize, width: usize, height: usize },

    #[error("unnormalized-glcm: sum={0}")]
    UnnormalizedGlcm(f64),

    #[error("roi-too-small: side {0} < 4")]
    RoiTooSmall(usize),

    #[error("empty-stats")]
    EmptyStats,

    #[error("missing-class: {0}")]
    MissingClass(String),

    #[error("diverged: non-finite loss at epoch {0}")]
    Diverged(usize),

    #[error("dimension-mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length-mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("id-pool-exhausted")]
    IdPoolExhausted,

    #[error("schema: {0}")]
    Schema(String),

    #[error("invalid-input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(String),

    #[error("bind: {0}")]
    Bind(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::RoiExceedsImage { .. } => "roi-exceeds-image",
            Error::SeedOutOfBounds { .. } => "seed-out-of-bounds",
            Error::UnreviewedRoi(_) => "unreviewed-roi",
            Error::BadSelection(_) => "bad-selection",
            Error::DegenerateMask(_) => "degenerate-mask",
            Error::DisplacementTooLarge { .. } => "displacement-too-large",
            Error::UnnormalizedGlcm(_) => "unnormalized-glcm",
            Error::RoiTooSmall(_) => "roi-too-small",
            Error::EmptyStats => "empty-stats",
            Error::MissingClass(_) => "missing-class",
            Error::Diverged(_) => "diverged",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::LengthMismatch(..) => "length-mismatch",
            Error::IdPoolExhausted => "id-pool-exhausted",
            Error::Schema(_) => "schema",
            Error::InvalidInput(_) => "invalid-input",
            Error::Io(_) => "io",
            Error::Bind(_) => "bind",
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        Error::Io(format!("{context}: {err}"))
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
