use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operation requires a non-empty polygon")]
    EmptyPolygon,

    #[error("triangle ({base}, {i}, {j}) is clockwise")]
    ClockwiseTriangle { base: usize, i: usize, j: usize },

    #[error("brute-force oracle refuses n = {n} (limit {max_n})")]
    OracleTooLarge { n: usize, max_n: usize },

    #[error("interior region is empty: L0 * h = {0} >= 1/2")]
    EmptyInterior(f64),

    #[error("thinned estimate captures no data points")]
    ThinningEmpty,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{source_name}:{line}: key `{key}`: {message}")]
    Parse {
        source_name: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
