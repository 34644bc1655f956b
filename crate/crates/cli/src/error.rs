use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot parse config: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] twistres::Error),

    #[error("cannot write output: {0}")]
    Output(String),

    #[error("{failed} of {total} property checks failed: {names}")]
    ChecksFailed { failed: usize, total: usize, names: String },
}

impl CliError {
    /// 2 configuration, 3 numerical failure, 4 certification refused,
    /// 1 anything else (I/O on the output side).
    pub fn exit_code(&self) -> u8 {
        use twistres::Error as E;
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Invalid(_) => 2,
            CliError::Core(e) => match e {
                E::Config(_) | E::Geometry(_) | E::Profile(_) | E::Unsupported(_) => 2,
                E::DeltaTooLarge { .. } | E::Decay { .. } | E::Certification(_) => 4,
                _ => 3,
            },
            CliError::ChecksFailed { .. } => 3,
            CliError::Output(_) => 1,
        }
    }
}
