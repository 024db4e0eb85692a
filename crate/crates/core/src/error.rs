use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("strict turnstile violation: {0}")]
    TurnstileViolation(String),

    #[error("stream length cap exceeded: {len} updates > cap {cap}")]
    StreamCapExceeded { len: usize, cap: usize },

    #[error("sampler aborted after retry: {0}")]
    SamplerAbort(String),

    #[error("sketch corruption: {0}")]
    SketchCorrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
