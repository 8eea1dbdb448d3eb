use thiserror::Error;

/// Errors raised anywhere in the drafting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("document has no sentences after cleaning")]
    EmptyDocument,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidN(usize),
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("reference text has no tokens")]
    EmptyReference,
    #[error("target text yields no {0}-grams")]
    NoNgrams(usize),
    #[error("span out of range: section {section}, sentences {start}..{end}")]
    SpanOutOfRange {
        section: usize,
        start: usize,
        end: usize,
    },
    #[error("degenerate training config: {0}")]
    DegenerateConfig(String),
    #[error("service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("snippet window must be at least 1, got {0}")]
    InvalidWindow(usize),
    #[error("no snippets to index")]
    EmptySnippets,
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("title is empty")]
    EmptyTitle,
    #[error("paper has no figures or tables")]
    NoFigures,
    #[error("no slide links a figure")]
    NoEligibleSlides,
    #[error("generation context is empty")]
    EmptyContext,
    #[error("generator returned no content")]
    EmptyGeneration,
    #[error("slide line is empty")]
    EmptyLine,
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("no training samples")]
    EmptyTraining,
    #[error("model has not been fitted")]
    UnfittedModel,
    #[error("deck {0} has no paired paper")]
    MisalignedCorpora(String),
    #[error("invalid model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The variant name, stable across messages; used in API error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SchemaError",
            Error::EmptyDocument => "EmptyDocument",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::InvalidN(_) => "InvalidN",
            Error::InvalidK(_) => "InvalidK",
            Error::EmptyReference => "EmptyReference",
            Error::NoNgrams(_) => "NoNgrams",
            Error::SpanOutOfRange { .. } => "SpanOutOfRange",
            Error::DegenerateConfig(_) => "DegenerateConfig",
            Error::ServiceUnavailable(_) => "ServiceUnavailable",
            Error::Timeout(_) => "Timeout",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::EmptySnippets => "EmptySnippets",
            Error::AlphaOutOfRange(_) => "AlphaOutOfRange",
            Error::EmptyTitle => "EmptyTitle",
            Error::NoFigures => "NoFigures",
            Error::NoEligibleSlides => "NoEligibleSlides",
            Error::EmptyContext => "EmptyContext",
            Error::EmptyGeneration => "EmptyGeneration",
            Error::EmptyLine => "EmptyLine",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::EmptyTraining => "EmptyTraining",
            Error::UnfittedModel => "UnfittedModel",
            Error::MisalignedCorpora(_) => "MisalignedCorpora",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "SchemaError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
