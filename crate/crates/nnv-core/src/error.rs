use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension { context: &'static str, expected: usize, found: usize },
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("cannot split dimension {0}: zero width")]
    DegenerateSplit(usize),
    #[error("set is not convex and cannot be encoded as linear constraints")]
    NonconvexSet,
    #[error("complement of the set is not convex")]
    NonconvexComplement,
    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),
    #[error("missing or non-finite bounds: {0}")]
    Bounds(String),
    #[error("set is empty")]
    EmptySet,
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { context, expected, found })
    }
}
