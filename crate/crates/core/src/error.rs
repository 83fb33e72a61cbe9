use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("body or cell is unbounded")]
    Unbounded,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("window does not contain the body (h(window,u) = {window} < h(K,u) = {body})")]
    WindowTooSmall { window: f64, body: f64 },

    #[error("hyperplane meets the unit ball (|tau| = {0} <= 1)")]
    HitsUnitBall(f64),

    #[error("hyperplane meets the body")]
    HitsBody,

    #[error("bodies are not nested: h(K,u) exceeds h(L,u) by {0}")]
    NotNested(f64),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("truncation frequency {frequency} exceeds {limit}; window misconfigured")]
    ExcessTruncation { frequency: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
