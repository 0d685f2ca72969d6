use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("transition matrix has support outside the edge set at ({0}, {1})")]
    OffSupport(usize, usize),

    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    #[error("root is not bracketed: g(lo) = {g_lo}, g(hi) = {g_hi}, target = {target}")]
    Bracket { g_lo: f64, g_hi: f64, target: f64 },

    /// A node's attack duration admits zero capture probability for the strategy class.
    #[error("attack duration {tau} at node {node} is below the required minimum {min}")]
    InfeasibleTau { node: usize, tau: u32, min: u32 },

    #[error("trivial game: {0}")]
    TrivialGame(String),

    #[error("budget {budget} outside the admissible range ({lo}, {hi})")]
    BudgetOutOfRange { budget: u64, lo: u64, hi: u64 },

    #[error("budget {0} must be even")]
    Parity(u64),

    #[error("invalid balancing start: {0}")]
    InvalidStart(String),

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpaceExceeded { size: u128, limit: u128 },
}
