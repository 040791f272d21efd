use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("unresolved reference in `{0}`")]
    BadReference(String),
    #[error("value out of range for `{0}`")]
    OutOfRange(String),
    #[error("invalid value for `{key}`: {msg}")]
    InvalidValue { key: String, msg: String },

    #[error("no serving base station after {0} redraws; densities too low for the region")]
    DegenerateScenario(u32),
    #[error("a muted macro base station cannot serve in blanked subframes (bs {0})")]
    InvalidMode(usize),
    #[error("link (user {user}, bs {bs}) is not stored in this table")]
    MissingLink { user: usize, bs: usize },
    #[error("search space of {size} assignments exceeds the limit of {limit}")]
    TooLarge { size: f64, limit: u64 },
    #[error("user {0} has no positive rate to any base station")]
    NoFeasibleUser(usize),
    #[error("user {0} is served with zero rate; log utility undefined")]
    UndefinedUtility(usize),
    #[error("empty sample set")]
    EmptySamples,
    #[error("non-positive sample {0}")]
    NonPositiveSample(f64),

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Errors caused by bad configuration or arguments, as opposed to
    /// failures during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::MissingField(_)
                | Error::UnknownKey(_)
                | Error::BadReference(_)
                | Error::OutOfRange(_)
                | Error::InvalidValue { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
