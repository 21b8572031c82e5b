use thiserror::Error;

use crate::prior::Contradiction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("no data rows")]
    NoData,

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient samples: {context} needs at least {required}, got {available}")]
    InsufficientSamples {
        context: String,
        required: usize,
        available: usize,
    },

    #[error("graph contains a cycle through `{0}`")]
    Cyclic(String),

    #[error("prior knowledge is contradictory: {}", format_contradictions(.0))]
    Contradictions(Vec<Contradiction>),

    #[error("{algorithm} did not converge after {iterations} iterations")]
    NotConverged {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("undirected edge {0} -- {1} lies on a causal path needed for estimation")]
    UndirectedOnPath(String, String),

    #[error("simulation diverged at step {step} (|value| > 1e6 for `{variable}`)")]
    Diverged { step: usize, variable: String },

    #[error("CI test on ({x}, {y}) failed: {source}")]
    CiTest {
        x: String,
        y: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_contradictions(list: &[Contradiction]) -> String {
    list.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
