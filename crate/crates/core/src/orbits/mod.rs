//! Fixed points, rotating limit cycles, Floquet multipliers, Lyapunov exponents and the
//! invariant manifolds of the saddle.

mod cycle;
mod fixed;
mod lyapunov;
mod manifolds;

pub use cycle::{
    closure_error, find_limit_cycle, floquet_multipliers, multipliers_of, CycleOptions,
    LimitCycle,
};
pub use fixed::{classify, find_fixed_points, Classification, FixedPoint};
pub use lyapunov::{max_lyapunov_exponent, LyapunovEstimate};
pub use manifolds::{
    homoclinic_gap, pendulum_saddle, saddle_manifolds, BranchKind, ManifoldBranch, EPS_MANIFOLD,
};
