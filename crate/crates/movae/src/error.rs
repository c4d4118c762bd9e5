use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors emitted by the library.
///
/// Every variant carries enough context to be actionable from a CLI error
/// message. I/O failures are stored as strings so the type stays `Clone` and
/// comparable in tests.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tensor, layer, or image had an unexpected width/shape.
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// An operation was called with invalid arguments (empty data, duplicate
    /// labels, class too small, ...).
    Argument(String),
    /// An input value left its documented domain (e.g. a pixel outside [0,1]).
    Domain(String),
    /// A metric input had zero variance and no correlation is defined.
    Degenerate(&'static str),
    /// An operation requires state the object does not have (e.g. predicting
    /// with an untrained mixture).
    State(&'static str),
    /// A non-finite value appeared where the math requires finite ones.
    Numerical(String),
    /// A file did not match its expected binary format.
    Format(String),
    /// Two inputs that must agree (e.g. image and label counts) did not.
    Consistency(String),
    /// An underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                context,
                expected,
                got,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, got {got}"),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Error::State(what) => write!(f, "invalid state: {what}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Consistency(msg) => write!(f, "consistency error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Stable process exit code for the CLI, grouped by error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Domain(_) => 2,
            Error::Io(_) => 3,
            Error::Format(_) | Error::Consistency(_) => 4,
            Error::Dimension { .. } => 5,
            Error::Numerical(_) => 6,
            Error::State(_) | Error::Degenerate(_) => 7,
        }
    }
}
