use thiserror::Error;

/// Library-wide error type. The variant determines the CLI exit code:
/// `Invalid`/`Parse`/`Io` map to 2, `IllPosed` to 3, `Infeasible` to 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data: bad CSV header, unparsable field, wrong sign.
    /// Carries the location of the first violation where one exists.
    #[error("parse: {0}")]
    Parse(String),

    /// Arguments or parameters violate a documented validity range.
    #[error("invalid: {0}")]
    Invalid(String),

    /// The requested computation has no unique answer on this input
    /// (too few points, degenerate axes, empty fold).
    #[error("ill-posed: {0}")]
    IllPosed(String),

    /// The requested target cannot be reached by any admissible input
    /// (error level outside the attainable band, empty search domain).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-parsable code, printed by the CLI as `code:<kind>`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Invalid(_) => "invalid",
            Error::IllPosed(_) => "ill-posed",
            Error::Infeasible(_) => "infeasible",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Invalid(_) | Error::Io(_) => 2,
            Error::IllPosed(_) => 3,
            Error::Infeasible(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
