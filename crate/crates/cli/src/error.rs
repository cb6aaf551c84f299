use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] confgraph::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{0} replications hit the exploration cap")]
    CapBreach(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::CapBreach(_) => 3,
            CliError::Model(_) | CliError::Io(_) => 1,
        }
    }
}
