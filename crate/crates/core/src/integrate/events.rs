use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{winding_of, CylinderPoint, PlanarSystem, Vec2};

use super::flows::StateOde;
use super::solver::{Driver, Flow, IntegratorConfig, OdeSystem, Segment};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
    #[default]
    Either,
}

impl Direction {
    fn admits(&self, rising: bool) -> bool {
        match self {
            Direction::Increasing => rising,
            Direction::Decreasing => !rising,
            Direction::Either => true,
        }
    }
}

/// A level set on the cylinder. Angle sections are met at every lift `θ* + 2πn`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Section {
    AngleCrossing {
        theta: f64,
        #[serde(default)]
        direction: Direction,
    },
    VelocityCrossing {
        v: f64,
        #[serde(default)]
        direction: Direction,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectionEvent {
    pub t: f64,
    pub state: CylinderPoint,
    pub winding: i64,
    pub rising: bool,
}

/// Below this rate a crossing is considered tangential.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

/// Every crossing of `section` along the solution from `x0` over `t_span`, located to a residual
/// of at most `1e-10` by bisection on the exact one-step map.
pub fn detect_crossings(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
    section: Section,
) -> Result<Vec<SectionEvent>> {
    let ode = StateOde { sys };
    let plain = IntegratorConfig {
        sample_dt: None,
        ..cfg.clone()
    };
    let driver = Driver::new(&ode, &plain);
    let mut events = Vec::new();
    let mut failure = None;
    driver.run(t_span.0, [x0.theta(), x0.v()], t_span.1, None, |seg: &Segment<2>| {
        for (level, comp, direction) in levels(section, seg) {
            let g = |y: &[f64; 2]| y[comp] - level;
            let (g0, g1) = (g(&seg.y0), g(&seg.y1));
            if g0 == 0.0 || (g0 > 0.0) == (g1 > 0.0) && g1 != 0.0 {
                continue;
            }
            // a crossing is counted where g leaves zero or changes sign
            let rising = g1 > g0;
            if !direction.admits(rising) {
                continue;
            }
            let (t, y) = driver.refine_root(seg, g);
            let rate = sys.field(Vec2::new(y[0], y[1]), t)[comp];
            if rate.abs() < TRANSVERSALITY_TOL {
                failure = Some(Error::TangentialCrossing { t, rate });
                return Flow::Stop;
            }
            events.push(SectionEvent {
                t,
                state: CylinderPoint::new(y[0], y[1]),
                winding: winding_of(y[0]),
                rising,
            });
        }
        Flow::Continue
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    if t_span.1 < t_span.0 {
        events.reverse();
    }
    Ok(events)
}

/// Candidate levels inside one step: `(level, component, direction)`.
fn levels(section: Section, seg: &Segment<2>) -> Vec<(f64, usize, Direction)> {
    match section {
        Section::VelocityCrossing { v, direction } => vec![(v, 1, direction)],
        Section::AngleCrossing { theta, direction } => {
            let tau = 2.0 * PI;
            let (a, b) = (seg.y0[0].min(seg.y1[0]), seg.y0[0].max(seg.y1[0]));
            let lo = ((a - theta) / tau).floor() as i64;
            let hi = ((b - theta) / tau).ceil() as i64;
            (lo..=hi)
                .map(|n| theta + tau * n as f64)
                .filter(|l| *l >= a && *l <= b)
                .map(|l| (l, 0, direction))
                .collect()
        }
    }
}

/// How a search for a level crossing ended.
#[derive(Clone, Copy, Debug)]
pub enum LevelOutcome<const N: usize> {
    Reached { t: f64, y: [f64; N] },
    Aborted { t: f64, y: [f64; N] },
    Exhausted { t: f64, y: [f64; N] },
}

/// Integrates until `g` first changes sign (from a nonzero value), refining the crossing; stops
/// early when `abort` returns true for an accepted step.
pub fn run_to_level<const N: usize, O: OdeSystem<N>>(
    ode: &O,
    cfg: &IntegratorConfig,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    g: impl Fn(&[f64; N]) -> f64,
    mut abort: impl FnMut(&Segment<N>) -> bool,
) -> Result<LevelOutcome<N>> {
    let plain = IntegratorConfig {
        sample_dt: None,
        ..cfg.clone()
    };
    let driver = Driver::new(ode, &plain);
    let mut outcome = None;
    let end = driver.run(t0, y0, t_end, None, |seg| {
        let (g0, g1) = (g(&seg.y0), g(&seg.y1));
        if g0 != 0.0 && (g1 == 0.0 || (g0 > 0.0) != (g1 > 0.0)) {
            let (t, y) = driver.refine_root(seg, &g);
            outcome = Some(LevelOutcome::Reached { t, y });
            return Flow::Stop;
        }
        if abort(seg) {
            outcome = Some(LevelOutcome::Aborted {
                t: seg.t1,
                y: seg.y1,
            });
            return Flow::Stop;
        }
        Flow::Continue
    })?;
    Ok(outcome.unwrap_or(LevelOutcome::Exhausted { t: end.t, y: end.y }))
}
