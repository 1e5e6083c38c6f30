use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point, vector or domain lies outside the region where the model's chart is valid.
    #[error("domain error: {0}")]
    Domain(String),

    /// A catalog lookup failed.
    #[error("unknown {kind} `{name}` for {model}{}", suggestion_suffix(.suggestion))]
    Catalog {
        kind: &'static str,
        name: String,
        model: String,
        suggestion: Option<String>,
    },

    /// A numeric parameter violates its precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A simulated path left the chart before it left the domain.
    #[error("simulation error: {0}")]
    Simulation(String),

    /// Two inputs that must agree do not.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn suggestion_suffix(s: &Option<String>) -> String {
    match s {
        Some(s) => format!(" (did you mean `{s}`?)"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}

/// Closest catalog entry by edit distance, if any is reasonably close.
pub(crate) fn nearest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .min()
        .filter(|(d, c)| *d <= c.len().max(name.len()) / 2 + 1)
        .map(|(_, c)| c.to_string())
}
