use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse manifest: {0}")]
    Parse(String),

    #[error("invalid manifest at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for unreadable input, 3 for invalid content.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Validation { .. } => 3,
        }
    }
}
