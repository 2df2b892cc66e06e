//! Contraction certificates: decay scans of Finsler-Lyapunov functions, convergence of solution
//! pairs, passive feedback interconnections and transversal contraction around limit cycles.

mod decay;
mod horizontal;
mod interconnect;
mod pairs;

pub use crate::geometry::residual_w;
pub use decay::{scan_decay, DecayGrid, DecayReport, DecaySample};
pub(crate) use decay::linspace;
pub use horizontal::{horizontal_contraction_near_cycle, horizontal_factor_from, HorizontalContraction};
pub use interconnect::{
    interconnect_pair_convergence, interconnect_passive, storage_inequality_check, OutputFeedback, PassiveFeedbackLoop,
    PassiveInterconnection, StorageCheck,
};
pub use pairs::{verify_pair_contraction, PairConvergence, DISTANCE_FLOOR};
