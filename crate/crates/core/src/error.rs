use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("truncation order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("direction {direction} out of range for {dim} variables")]
    Direction { direction: usize, dim: usize },
    #[error("cannot differentiate a jet of order 0")]
    OrderExhausted,
    #[error("jet order {have} too low, this computation needs {need}")]
    OrderTooLow { have: usize, need: usize },
    #[error("constant term vanishes (or is not positive where required)")]
    VanishingConstant,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("Gram-Schmidt breakdown at leading minor {minor} (norm {norm:e}, expected sign {sign})")]
    FrameBreakdown { minor: usize, norm: f64, sign: f64 },
    #[error("unsupported signature ({p},{q})")]
    UnsupportedSignature { p: usize, q: usize },
    #[error("no nonzero invariant pairing solves the invariance system")]
    NoInvariantPairing,
    #[error("bundle mismatch: {0}")]
    Bundle(String),
    #[error("invalid kind: {0}")]
    InvalidKind(String),
    #[error("spinor is not generic: B(X,X) = {0:e}")]
    NonGeneric(f64),
    #[error("unconditional case: k = {0} couplings need no condition")]
    UnconditionalCase(usize),
    #[error("scenario error at {pointer}: {message}")]
    Scenario { pointer: String, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn scenario(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario { pointer: pointer.into(), message: message.into() }
    }
}
