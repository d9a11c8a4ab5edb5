use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A failed exact identity, with the indices it was evaluated at and both sides.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct IdentityFailure {
    pub identity: &'static str,
    pub indices: Vec<(&'static str, i64)>,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for IdentityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at (", self.identity)?;
        for (i, (name, value)) in self.indices.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        write!(f, "): lhs = {}, rhs = {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("undefined coefficient: {0}")]
    UndefinedCoefficient(String),

    #[error("empty input")]
    EmptyInput,

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("requires a > b (got a = {a}, b = {b})")]
    RequiresOrderedLabels { a: usize, b: usize },

    #[error("q = 1 unsupported for q-power bounds")]
    ClassicalParameter,

    #[error("K(q) diverges at q = 1")]
    KDiverges,

    #[error("series diverges (t = {t} is not below N = {n})")]
    SeriesDiverges { t: f64, n: f64 },

    #[error("oracle degree cap: degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("zero intertwiner space: {gamma} does not occur in {a} (x) {b}")]
    ZeroIntertwinerSpace { a: usize, b: usize, gamma: usize },

    #[error("incompatible degrees: {0}")]
    DegreeMismatch(String),

    #[error("truncation overflow: channels {channels:?} exceed K_max = {k_max}")]
    TruncationOverflow { channels: Vec<usize>, k_max: usize },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("identity violated: {0}")]
    IdentityViolation(Box<IdentityFailure>),

    #[error("configuration error{}: {message}", location(*line, field))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn location(line: Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" at line {l}, field `{f}`"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(f)) => format!(" in field `{f}`"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn identity(
        identity: &'static str,
        indices: &[(&'static str, i64)],
        lhs: impl fmt::Display,
        rhs: impl fmt::Display,
    ) -> Self {
        Error::IdentityViolation(Box::new(IdentityFailure {
            identity,
            indices: indices.to_vec(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }))
    }

    pub(crate) fn config(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }
}
