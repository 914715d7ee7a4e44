use thiserror::Error;

/// Errors produced anywhere in the scoring / pruning / sampling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parent set of size {size} exceeds max indegree {max}")]
    IndegreeViolation { size: usize, max: usize },

    #[error("resource cap exceeded: {0}")]
    ResourceExhausted(String),

    #[error("cannot draw from an empty distribution")]
    EmptyDistribution,

    #[error("chain is stuck: total proposal mass is zero")]
    StuckChain,

    #[error("move {0} would create a directed cycle")]
    WouldCreateCycle(String),

    #[error("graph has no arcs")]
    NoArcs,

    #[error("empty support while sampling a parent set for node {node}")]
    EmptySupport { node: usize },

    #[error("missing score for node {node}, parents {parents:?}")]
    MissingScore { node: usize, parents: Vec<usize> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
