use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rank error: {columns} basis columns requested for {rows} observations")]
    Rank { columns: usize, rows: usize },

    /// Malformed or non-finite input data.
    #[error("input error: {0}")]
    Input(String),

    /// The statistic is undefined for this input (e.g. all periodogram ordinates vanish).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("data file error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for usage/validation problems, 1 for runtime or numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Rank { .. } | Error::Input(_) | Error::Config(_) | Error::Data(_) => 2,
            Error::Degenerate(_) | Error::Simulation(_) | Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
