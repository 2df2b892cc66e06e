//! The `(k, u)` plane of the pendulum under constant torque: regimes, the homoclinic curve and
//! the critical damping.

mod cells;
mod curve;

pub use cells::{
    atlas_csv, classify_cell, probe_horizon, scan_atlas, AtlasCell, AtlasGrid, ProbeOutcome, Regime,
};
pub use curve::{
    curve_csv, estimate_kc, homoclinic_curve, homoclinic_torque, CriticalDamping,
};
