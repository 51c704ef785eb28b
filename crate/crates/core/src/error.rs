use thiserror::Error;

/// Errors raised by the simulator, grouped by how a driver should react.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime guard tripped: {0}")]
    Guard(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidInput(_) | Error::Domain(_) | Error::Config(_) => 2,
            Error::Guard(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
