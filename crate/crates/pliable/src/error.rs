use thiserror::Error;

/// Errors shared across the estimation, proposal, and sampling layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid-parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid-target: {0}")]
    InvalidTarget(String),

    /// The empirical mass cannot support the rejection constant:
    /// (m̂ + r)/(m̂ − 5r) needs m̂ > 5r.
    #[error("insufficient-mass: m_hat {m_hat} <= 5*r ({r})")]
    InsufficientMass { m_hat: f64, r: f64 },

    #[error("degenerate-proposal: total proposal mass is zero")]
    DegenerateProposal,

    #[error("degenerate-target: target has zero mass")]
    DegenerateTarget,

    /// EPRS phase 1 accepted nothing; no points to estimate from.
    #[error("estimation-failed: no accepted points after the initial phase")]
    EstimationFailed,

    #[error("budget-exhausted: all {limit} target evaluations spent")]
    BudgetExhausted { limit: usize },

    #[error("insufficient-data: {0}")]
    InsufficientData(String),

    #[error("sparse-cells: expected count below 5 in cell {0}")]
    SparseCells(usize),

    #[error("not-implemented: {0}")]
    NotImplemented(String),
}

pub type Result<T> = std::result::Result<T, Error>;
