use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image values length {len} does not match {width}x{height}")]
    ShapeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("image must be at least {min}x{min}, got {width}x{height}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("field of {field_width}x{field_height} sites does not fit a {width}x{height} image")]
    DimensionMismatch {
        width: usize,
        height: usize,
        field_width: usize,
        field_height: usize,
    },

    #[error("image contains a non-finite value at index {index}")]
    NonFiniteInput { index: usize },

    #[error("grid size h must be positive and finite, got {0}")]
    InvalidGridSize(f64),

    #[error("sigma must be nonnegative and finite, got {0}")]
    NegativeSigma(f64),

    #[error("contrast parameter lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("squared gradient argument must be nonnegative, got {0}")]
    NegativeArgument(f64),

    #[error("alpha must lie in [0, 0.5], got {0}")]
    AlphaOutOfRange(f64),

    #[error("gamma must lie in [-1, 1], got {0}")]
    GammaOutOfRange(f64),

    #[error("diffusion tensor ({a}, {b}, {c}) is not positive semidefinite")]
    IndefiniteTensor { a: f64, b: f64, c: f64 },

    #[error("grid with {n} unknowns exceeds dense limit of {max}")]
    MatrixTooLarge { n: usize, max: usize },

    #[error("operator is identically zero; no time step limit applies")]
    NoStepLimit,

    #[error("power iteration did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("number of steps must be at least 1")]
    InvalidSteps,

    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("invalid PGM sample: {0}")]
    PgmPayload(String),

    #[error("unsupported image format {0:?}")]
    PgmUnsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
