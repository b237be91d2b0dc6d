use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be turned into an instance.
    #[error("line {line}, field `{field}`: {message}")]
    Ingest {
        line: usize,
        field: String,
        message: String,
    },

    #[error("cannot read data: {0}")]
    DataSource(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("method `{method}` failed in run {run}, fold {fold}: {source}")]
    Experiment {
        method: String,
        run: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::SchemaMismatch(msg.into())
    }

    /// True for errors caused by the dataset rather than the configuration or
    /// the learners.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Ingest { .. } | Error::DataSource(_) | Error::Schema(_))
    }

    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
