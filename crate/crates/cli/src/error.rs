use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("gate violation: {0}")]
    Gate(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Core(#[from] corrgme::Error),
}

impl CliError {
    /// 0 success, 1 internal or i/o failure, 2 config error, 3 gate
    /// violation, 4 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) | CliError::Runtime(_) => 1,
            CliError::Core(e) => match e {
                corrgme::Error::StabilityGate { .. } => 3,
                corrgme::Error::DimensionCap { .. }
                | corrgme::Error::InvalidParameter { .. }
                | corrgme::Error::InvalidDimension { .. }
                | corrgme::Error::OutsideSupport { .. } => 2,
                _ => 1,
            },
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Gate(_) => "gate",
            CliError::Verification(_) => "verification",
            CliError::Io(_) => "io",
            CliError::Runtime(_) => "runtime",
            CliError::Core(corrgme::Error::StabilityGate { .. }) => "stability-gate",
            CliError::Core(corrgme::Error::DimensionCap { .. }) => "dimension-cap",
            CliError::Core(_) => match self.exit_code() {
                2 => "config",
                _ => "runtime",
            },
        }
    }
}
