use thiserror::Error;

/// Front-end failures, split by the exit status they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// A flag, config file or environment variable is unusable.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    /// The run started but could not finish.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// `2` for configuration errors, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<regret_design_core::Error> for CliError {
    fn from(e: regret_design_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}
