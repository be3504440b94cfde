use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("instance has no agents or no goods")]
    EmptyInstance,
    #[error("valuation row {agent} has {found} entries, expected {expected}")]
    RaggedRow {
        agent: usize,
        expected: usize,
        found: usize,
    },
    #[error("declared shape {declared_n}x{declared_m} does not match valuations")]
    ShapeMismatch {
        declared_n: usize,
        declared_m: usize,
    },
    #[error("agent {agent} has negative value for good {good}")]
    NegativeValue { agent: usize, good: usize },
    #[error("agent {agent} values every good at zero")]
    ZeroRow { agent: usize },
    #[error("ordering of agent {agent} is not a permutation of 0..{m}")]
    NotAPermutation { agent: usize, m: usize },
    #[error("profile has {found} orderings, expected {expected}")]
    ProfileSize { expected: usize, found: usize },
    #[error("column {good} of the allocation sums to {sum}, expected 1")]
    ColumnSum { good: usize, sum: String },
    #[error("share of agent {agent} in good {good} is outside [0,1]")]
    ShareRange { agent: usize, good: usize },
    #[error("goods are not partitioned: {0}")]
    NotAPartition(String),
    #[error("invalid coalition: {0}")]
    InvalidCoalition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("invalid copy count T={copies}: {reason}")]
    InvalidT { copies: String, reason: String },
    #[error("(n!)^m copies per good is too large to materialize (m*T = {total})")]
    FactorialTTooLarge { total: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Residuals reported alongside a failed solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LastResiduals {
    pub clearing: f64,
    pub budget: f64,
    pub mbb: f64,
    pub price_change: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FisherError {
    #[error("no convergence after {max_iter} iterations (last relative price change {:.3e})", .last.price_change)]
    NoConvergence {
        max_iter: usize,
        last: LastResiduals,
    },
    #[error("demand precondition violated: MBB residual {residual:.3e} exceeds tolerance")]
    PreconditionViolated { residual: f64 },
    #[error("zero-good policy: {0}")]
    ZeroGoodPolicy(String),
    #[error("rationalizing shares moved good {good} by {drift:.3e}")]
    RationalizationDrift { good: usize, drift: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncentiveError {
    #[error("search needs {count} profile evaluations, limit is {limit}")]
    SearchTooLarge { count: String, limit: u64 },
    #[error("coalition misreport kind does not match the mechanism")]
    MisreportKind,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}
