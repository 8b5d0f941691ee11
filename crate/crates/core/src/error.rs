use std::path::PathBuf;

/// Errors produced across the toolkit.
///
/// Variants fall into two families: input errors (bad files, degenerate data)
/// and contract violations (a caller broke a documented precondition).
/// [`Error::is_contract_violation`] tells them apart; the CLI maps the two
/// families onto exit codes 1 and 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("decode error at byte offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("score vectors are not aligned: {0}")]
    Alignment(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    #[error("comparison graph is disconnected into {} components: {components:?}", components.len())]
    Disconnected { components: Vec<Vec<String>> },

    #[error("scaling did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("missing image {}", .0.display())]
    MissingImage(PathBuf),

    #[error("insufficient overlap: {common} common ids, at least 2 required")]
    InsufficientOverlap { common: usize },

    #[error("transform was fitted for `{expected}` but applied to `{found}`")]
    TransformMismatch { expected: String, found: String },

    #[error("id collision while merging: `{0}`")]
    Collision(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn is_contract_violation(&self) -> bool {
        matches!(self, Error::Contract(_) | Error::Shape(_))
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
