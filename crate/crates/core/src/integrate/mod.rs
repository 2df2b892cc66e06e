//! Time integration: Runge-Kutta drivers, prolonged and fundamental-matrix flows, section events.

mod events;
mod flows;
mod solver;
mod trajectory;

pub use events::{
    detect_crossings, run_to_level, Direction, LevelOutcome, Section, SectionEvent,
    TRANSVERSALITY_TOL,
};
pub use flows::{
    flow_fundamental, flow_prolonged, flow_state, integrate_fundamental, integrate_prolonged,
    integrate_state, integrate_state_raw, FundamentalOde, ProlongedOde, StateOde,
};
pub(crate) use flows::{fundamental_state, split_fundamental};
pub use solver::{Driver, Flow, IntegratorConfig, Method, OdeSystem, RunEnd, Segment};
pub use trajectory::{Fundamental, Trajectory};
