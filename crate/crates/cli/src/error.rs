use std::process::ExitCode;

use dfnls_core::Error;

pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_IO: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },

    /// No nontrivial wave exists; the only solution is zero.
    #[error("solve: trivial solution only: {0}")]
    Trivial(String),

    #[error("{0}")]
    Validation(String),

    /// Some rows of a sweep failed; the rest were written.
    #[error("sweep: {failed} of {total} rows failed")]
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn stage(stage: &'static str, source: Error) -> Self {
        CliError::Stage { stage, source }
    }

    pub fn io(stage: &'static str, e: std::io::Error) -> Self {
        CliError::Stage {
            stage,
            source: Error::Io(e),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => EXIT_INVALID,
            CliError::Trivial(_) | CliError::PartialSweep { .. } => EXIT_CONVERGENCE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Stage { source, .. } => match source {
                Error::Domain(_) | Error::InvalidGrid(_) => EXIT_INVALID,
                Error::Io(_) | Error::Json(_) => EXIT_IO,
                _ => EXIT_CONVERGENCE,
            },
        })
    }
}
