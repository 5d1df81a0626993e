use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("state space of {size} states exceeds the oracle cap of {cap}")]
    OracleCap { size: u128, cap: usize },
    #[error(transparent)]
    Core(dmala::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::OracleCap { .. } => 3,
            HarnessError::Core(dmala::Error::InvalidArgument(_)) => 2,
            HarnessError::Core(_) | HarnessError::Io { .. } => 1,
        }
    }
}

impl From<dmala::Error> for HarnessError {
    fn from(e: dmala::Error) -> Self {
        match e {
            dmala::Error::StateSpaceTooLarge { size, cap } => HarnessError::OracleCap { size, cap },
            other => HarnessError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
