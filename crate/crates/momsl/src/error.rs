use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments or data: bad dimensions, out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Structurally valid request that cannot be satisfied, e.g. a block
    /// schedule demanding more blocks than there are samples.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    /// The solver produced a non-finite iterate.
    #[error("solver diverged at iteration {iter}: {detail}")]
    Diverged { iter: usize, detail: String },
    /// A diagnostic was requested that the originating run did not record.
    #[error("not recorded: {0}")]
    NotRecorded(String),
    /// Text data failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
