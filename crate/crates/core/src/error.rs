use std::path::PathBuf;

use thiserror::Error;

use crate::model::SkippedLine;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("zero valid entries in {path} ({} lines rejected)", skipped.len())]
    NoValidEntries {
        path: PathBuf,
        skipped: Vec<SkippedLine>,
    },
    #[error("{path}:{line}: malformed result record: {message}")]
    MalformedResult {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("network failure after retries: {0}")]
    Network(String),
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("response schema violation: {0}")]
    Schema(String),
    #[error("no mock rule matches prompt: {0}")]
    MockUnmatched(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("cannot read image {location}: {message}")]
    Image { location: String, message: String },
    #[error("cache I/O: {0}")]
    Cache(#[from] std::io::Error),
    #[error("gateway not configured: {0}")]
    NotConfigured(String),
}

/// Failure to parse a structured model answer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object found")]
    NoObject,
    #[error("JSON lacks all expected keys {0:?}")]
    MissingKeys(Vec<String>),
    #[error("no leading Deceptive/Non-deceptive label")]
    NoLabel,
    #[error("label present but rationale empty")]
    EmptyRationale,
    #[error("no \"Option <n>\" token")]
    NoOption,
    #[error("option {got} out of range 1..={n}")]
    OptionOutOfRange { got: usize, n: usize },
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{stage} output unparseable after retry ({cause}); raw responses: {raw:?}")]
    Unparseable {
        stage: &'static str,
        cause: ParseError,
        raw: Vec<String>,
    },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("all reasoner candidates invalid")]
    AllCandidatesInvalid,
    #[error("invalid entry: {0:?}")]
    InvalidEntry(Vec<String>),
    #[error("cannot write results to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<GatewayError> for PipelineError {
    fn from(e: GatewayError) -> Self {
        PipelineError::Agent(AgentError::Gateway(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {min} observations, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("constant input: correlation undefined")]
    ConstantInput,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("user rating {0} outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("embedder: {0}")]
    Embedder(String),
}
