use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("task failed: {0}")]
    Task(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Task(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<besselop_core::Error> for CliError {
    fn from(e: besselop_core::Error) -> Self {
        CliError::Task(e.to_string())
    }
}
