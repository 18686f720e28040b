use thiserror::Error;

/// Violation of a mathematical precondition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("shadowing factor must be positive, got {0}")]
    NonPositiveShadowing(f64),
    #[error("fast fading draw must be non-negative, got {0}")]
    NegativeFading(f64),
    #[error("speed history is empty")]
    EmptyHistory,
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("at least one UAV is required")]
    NoUavs,
    #[error("normalized count must be non-negative, got {0}")]
    NegativeCount(f64),
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("poisson rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("cannot normalize: no strictly positive value")]
    NothingPositive,
    #[error("traces come from different configurations ({0} vs {1})")]
    MixedConfig(String, String),
    #[error("no traces to aggregate")]
    NoTraces,
}

/// Configuration rejected by validation or parsing. Always names the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("`{field}`: cannot parse `{value}`")]
    BadValue { field: &'static str, value: String },
    #[error("`{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("AHP weights w_s + w_n + w_p must sum to 1, got {0}")]
    AhpWeightSum(f64),
    #[error("likelihood weights w_R + w_S must sum to 1, got {0}")]
    LikelihoodWeightSum(f64),
    #[error("`{field}` ({interval}) is not a multiple of the slot duration ({slot})")]
    NotSlotMultiple { field: &'static str, interval: f64, slot: f64 },
}

/// Malformed event trace line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
