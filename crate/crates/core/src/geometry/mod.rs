//! Finsler-Lyapunov functions, geodesic distances, cone fields and projections.

mod cone;
mod finsler;

pub use cone::{
    cone_membership, transversal_projection, ConeFieldSpec, ConeStatus, Membership, Projection,
    TOL_CONE,
};
pub(crate) use cone::projector_off;
pub use finsler::{
    analytic_vdot, chain_rule_vdot, eval_v, geodesic_distance, metric_decay_matrix,
    passivating_output, residual_w, FinslerLyapunov, DEFAULT_ETA,
};
