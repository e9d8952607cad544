use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("significand undefined for {0}: value must be finite and nonzero")]
    ZeroOrNonFinite(f64),

    #[error("malformed decimal {input:?}: {reason}")]
    Parse { input: String, reason: &'static str },

    #[error("decimal {0:?} has numeric value zero")]
    ZeroValue(String),

    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid model: {0}")]
    Model(String),

    #[error("replicate storage of {requested} bytes exceeds the ceiling of {ceiling} bytes")]
    Budget { requested: u64, ceiling: u64 },

    #[error("no asymptotic null distribution for {0}; use a Monte Carlo null (B > 0)")]
    NoAsymptotic(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("null cache: {0}")]
    Cache(String),

    #[error("cannot read {path}: {source}")]
    Input {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Errors caused by the caller's data or parameters rather than by this
    /// library or the environment.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Line { source, .. } => source.is_data_error(),
            Error::Io(_) | Error::Cache(_) => false,
            _ => true,
        }
    }
}
