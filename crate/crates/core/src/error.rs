use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario or scheme settings that violate a documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Problem size beyond what an exhaustive routine accepts.
    #[error("size limit exceeded: {0}")]
    Size(String),

    /// Caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Experiment spec rejected; `line` is 1-based in the spec file.
    #[error("line {line}: {msg}")]
    Spec { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
