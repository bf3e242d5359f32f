//! Config parsing and result serialization for the `ble-link` binary,
//! split out so integration tests can exercise them directly.

pub mod config;
pub mod output;

use std::fmt;

use ble_link_model::scenario::ValidationErrors;
use ble_link_model::ModelError;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad flag combination, unreadable or unwritable file.
    Input(String),
    /// The model failed to converge or produced inconsistent numbers.
    Numeric(String),
    /// `validate` ran fine but the simulator disagreed with the model.
    Tolerance(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numeric(m) | CliError::Tolerance(m) => f.write_str(m),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<ValidationErrors> for CliError {
    fn from(e: ValidationErrors) -> Self {
        CliError::Input(e.to_string())
    }
}
