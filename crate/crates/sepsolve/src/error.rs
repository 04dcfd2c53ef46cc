use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent} is infeasible: {detail}")]
    AgentInfeasible { agent: usize, detail: String },

    #[error("point for agent {agent} violates its domain")]
    DomainViolation { agent: usize },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance generation failed for agent {agent}: {attempts} consecutive infeasible draws")]
    GenerationFailed { agent: usize, attempts: u32 },

    #[error("caratheodory reduction failed: {detail}")]
    CaratheodoryFailure { detail: String },

    #[error("dual bracket invalid: maximizer within {margin} of the search-box boundary (radius {radius}); enlarge the box")]
    BracketOnBoundary { margin: f64, radius: f64 },

    #[error("domain of agent {agent} is not enumerable within {limit} points")]
    DomainTooLarge { agent: usize, limit: u64 },

    #[error("trace parse error at line {line}: {detail}")]
    TraceParse { line: usize, detail: String },

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
