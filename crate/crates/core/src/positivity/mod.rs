//! Differential positivity of planar systems: invariance of polyhedral cone fields, the
//! Perron-Frobenius vector field, and certificates built on them for the pendulum.

mod certificates;
mod invariance;
mod pf;

pub use certificates::{
    certify_corollary2, dichotomy_classify, homoclinic_obstruction_check, CaseIIDiagnostics,
    Corollary2, Dichotomy, ObstructionReport, OmegaLimit, TrappingRegion, DEFAULT_RHO,
    HOMOCLINIC_TOL,
};
pub use invariance::{
    infinitesimal_margins, verify_cone_invariance, InvarianceReport, PointMargins, StateGrid,
    Verdict, Witness, STRICT_MARGIN,
};
pub use pf::{
    misalignment_along, pf_at_point, pf_at_time, pf_consistency, pf_vector_field,
    projective_distance, vector_field_alignment, PFField, PFPoint, PF_TOL,
};
