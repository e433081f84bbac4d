use std::fmt;

use serde_json::json;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_COMPAT: u8 = 3;
pub const EXIT_PARTIAL: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or missing inputs.
    Config(String),
    /// Model and data (or model file and this build) do not fit together.
    Compat(String),
    /// Some records failed; the rest were processed.
    Partial {
        failed: usize,
        total: usize,
    },
    Core(chainboost::Error),
}

impl CliError {
    pub fn config(e: chainboost::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compat(_) => EXIT_COMPAT,
            CliError::Partial { .. } => EXIT_PARTIAL,
            CliError::Core(_) => EXIT_FAILURE,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Compat(_) => "compatibility",
            CliError::Partial { .. } => "partial",
            CliError::Core(_) => "runtime",
        }
    }

    /// One line of JSON for stderr.
    pub fn to_json_line(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Compat(m) => f.write_str(m),
            CliError::Partial { failed, total } => write!(f, "{failed} of {total} records failed"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<chainboost::Error> for CliError {
    fn from(e: chainboost::Error) -> Self {
        use chainboost::Error as E;
        match e {
            E::LabelMapMismatch(m) | E::IncompatibleModel(m) => CliError::Compat(m),
            E::InvalidArgument(_) | E::TooFewClasses { .. } | E::ClassTooSmall { .. } => {
                CliError::config(e)
            }
            E::Io { .. } | E::MalformedRecord { .. } | E::EmptyCorpus | E::Format(_) => {
                CliError::config(e)
            }
            other => CliError::Core(other),
        }
    }
}
