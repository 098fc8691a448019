pub const EXIT_OK: u8 = 0;
/// Analysis ran but the network or block lacks a full channel receptive field.
pub const EXIT_NOT_FCRF: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or inconsistent flags.
    #[error("usage: {0}")]
    Usage(String),
    /// Valid flags, but the input data is unusable or the problem infeasible.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<clcnet::Error> for CliError {
    fn from(e: clcnet::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult = Result<u8, CliError>;
