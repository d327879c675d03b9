use sbdc_core::error::{GraphError, MarginError, ParseError};
use thiserror::Error;

/// Exit-code classes: 1 for domain errors, 2 for bad input.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MarginError> for CliError {
    fn from(e: MarginError) -> Self {
        match e {
            MarginError::Graph(GraphError::NotAnEdge { .. })
            | MarginError::Graph(GraphError::SameNode(_))
            | MarginError::Graph(GraphError::NodeOutOfRange { .. })
            | MarginError::StepGainOutOfRange { .. }
            | MarginError::NotUniform => CliError::Domain(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
