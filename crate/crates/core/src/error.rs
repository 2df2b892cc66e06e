use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("trajectories are sampled on different time grids")]
    MismatchedGrids,

    #[error("tangent vector has zero length")]
    ZeroTangent,

    #[error("vector field vanishes at ({theta}, {v}); no transversal direction exists")]
    EquilibriumPoint { theta: f64, v: f64 },

    #[error("adaptive step size {h:e} fell below h_min at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("section crossing at t = {t} is tangential (|dg/dt| = {rate:e})")]
    TangentialCrossing { t: f64, rate: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no limit cycle: {0}")]
    NoCycle(String),

    #[error("fixed point is not a saddle")]
    NotASaddle,

    #[error("manifold branch left the trapping region before reaching the section")]
    BranchEscaped,

    #[error("trajectory left the certified region at t = {t}")]
    LeftRegion { t: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("homoclinic gap has no sign change for k = {k}")]
    NoSignChange { k: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
