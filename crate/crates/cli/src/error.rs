use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: gspde::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 = config error, 3 = numerical failure, 4 = verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } | CliError::Output { .. } => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Attach a config field path to a library error. Validation failures become
/// config errors; everything else is a numerical failure.
pub fn at(context: &str) -> impl FnOnce(gspde::Error) -> CliError + '_ {
    move |e| match e {
        gspde::Error::Domain(_)
        | gspde::Error::DimensionMismatch { .. }
        | gspde::Error::Range(_)
        | gspde::Error::Contract(_)
        | gspde::Error::Config(_) => CliError::Config(format!("{context}: {e}")),
        other => CliError::Numerical {
            context: context.to_string(),
            source: other,
        },
    }
}
