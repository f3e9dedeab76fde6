use codeaware_core::cagen::CagenError;
use codeaware_core::correlate::CorrelateError;
use codeaware_core::doc::DocError;
use codeaware_core::evaluate::EvalError;
use codeaware_core::impact::{AdapterError, ImpactError};
use codeaware_core::model::ModelError;

/// Failure classes map one-to-one onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Adapter(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Adapter(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<ImpactError> for CliError {
    fn from(e: ImpactError) -> Self {
        match e {
            ImpactError::Adapter(a) => CliError::Adapter(a.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AdapterError> for CliError {
    fn from(e: AdapterError) -> Self {
        CliError::Adapter(e.to_string())
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(ModelError, CorrelateError, EvalError, CagenError, DocError);

pub type Result<T> = std::result::Result<T, CliError>;
