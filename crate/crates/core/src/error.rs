use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge ({from}, {to}) for {m} agents")]
    InvalidEdge { from: usize, to: usize, m: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("ergodic average is undefined for T = {0} (needs T >= 2)")]
    UndefinedAverage(usize),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("problem is infeasible or ill-posed: {0}")]
    IllPosed(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl Error {
    /// Process exit status: 1 for configuration errors, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config { .. } => 1,
            _ => 2,
        }
    }
}
