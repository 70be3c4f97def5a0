use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("field {field}: {msg}")]
    Field { field: String, msg: String },
    #[error("network: {0}")]
    Network(nnv_core::Error),
    #[error("unknown solver {0:?}")]
    UnknownSolver(String),
    #[error("{0}")]
    Param(String),
    #[error("solver {solver} does not accept this problem: {msg}")]
    Contract { solver: String, msg: String },
    #[error(transparent)]
    Core(#[from] nnv_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code: 3 for malformed input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Json { .. }
            | CliError::Field { .. }
            | CliError::Network(_)
            | CliError::UnknownSolver(_)
            | CliError::Param(_)
            | CliError::Usage(_) => 3,
            CliError::Contract { .. } | CliError::Core(_) => 1,
        }
    }
}
