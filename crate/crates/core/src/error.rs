use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid initial state: {0}")]
    InitialState(String),
    #[error("degenerate eigenbasis: |E| vanishes at q = {q}")]
    DegenerateBasis { q: f64 },
    #[error("exceptional point on bond {bond} (|t| = gamma)")]
    ExceptionalPoint { bond: u8 },
    #[error("bulk gap closing: |t1^2 - g1^2| = |t2^2 - g2^2|")]
    GapClosing,
    #[error("det H_S(q) vanishes at q = {q}")]
    DetZero { q: f64 },
    #[error("topological regime is indeterminate on a phase boundary")]
    Indeterminate,
    #[error("Sylvester equation is singular (min |beta_m* + beta_l| = {gap:e})")]
    SingularSylvester { gap: f64 },
    #[error("total dissipation rate is zero")]
    ZeroRate,
    #[error("rates violate the solvable constraint")]
    NotSolvable,
    #[error("defective eigenbasis (condition {condition:e})")]
    DefectiveBasis { condition: f64 },
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("time grid must be non-decreasing and finite")]
    BadTimes,
    #[error("lifetime search failed: {0}")]
    Lifetime(String),
}
