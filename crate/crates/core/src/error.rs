use std::fmt;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs disagree on shape (alphabet size, vector lengths, site counts).
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical evaluation left the representable range.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A model or graph violates its declared invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Exact enumeration would exceed its configuration budget.
    #[error("enumeration budget exceeded: {required:.3e} configurations required, limit {limit:.0e}")]
    Budget { required: f64, limit: f64 },

    /// An importance-sampling run produced no replica inside the event.
    #[error("zero effective sample size: no replica out of {replicas} hit the event")]
    NoEffectiveSamples { replicas: u64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Configuration failed schema or invariant validation.
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Config(Vec<Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A single configuration problem, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}
