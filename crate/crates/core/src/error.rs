use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("line {line}: unknown interaction kind {kind:?} (expected \"sale\" or \"view\")")]
    UnknownKind { line: usize, kind: String },

    #[error("line {line}: quantity must be positive, got {quantity}")]
    NonPositiveQuantity { line: usize, quantity: i64 },

    #[error("invalid feature table {path}: {reason}")]
    FeatureTable { path: String, reason: String },

    #[error("training data is empty")]
    EmptyTraining,

    #[error("singular least-squares system for row {row} (regularization {regularization})")]
    SingularSystem { row: usize, regularization: f64 },

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("unknown item {0:?}")]
    UnknownItem(String),

    #[error("missing features for {0}")]
    MissingFeatures(String),

    #[error("feature row does not match schema: {0}")]
    SchemaMismatch(String),

    #[error("degenerate training table: {0}")]
    DegenerateTable(String),

    #[error("no candidate items to rank")]
    EmptyCandidates,

    #[error("need at least {needed} users, got {got}")]
    TooFewUsers { needed: usize, got: usize },

    #[error("top-k popularity is zero (no training sales)")]
    ZeroPopularity,

    #[error("no sales recorded")]
    ZeroSales,

    #[error("every user has undefined NDCG")]
    AllUndefined,

    #[error("infeasible generator targets: {0}")]
    InfeasibleTargets(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("serialization: {0}")]
    Serde(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

/// Attaches a pipeline stage name to errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
