use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{run_to_level, Driver, Flow, IntegratorConfig, LevelOutcome, StateOde};
use crate::model::{CylinderPoint, Pendulum, PendulumParams, PlanarSystem, Vec2};

use super::fixed::{find_fixed_points, Classification, FixedPoint};

/// Offset along the eigenvectors used to seed manifold branches.
pub const EPS_MANIFOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifoldBranch {
    pub origin: FixedPoint,
    pub kind: BranchKind,
    pub sign: i8,
    pub points: Vec<CylinderPoint>,
    /// Arclength in the lifted plane at each point.
    pub arclength: Vec<f64>,
}

impl ManifoldBranch {
    /// Closest approach to the origin after the branch has first moved `leave` away from it.
    pub fn return_distance(&self, leave: f64) -> Option<f64> {
        let o = self.origin.point;
        let start = self.points.iter().position(|p| p.distance(&o) > leave)?;
        self.points[start..]
            .iter()
            .map(|p| p.distance(&o))
            .min_by(f64::total_cmp)
    }
}

/// The four branches of a saddle's invariant manifolds: unstable ones forward in time,
/// stable ones backward, each cut at `arclength_budget` or when `|v| > v_max`.
pub fn saddle_manifolds(
    fp: &FixedPoint,
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
    arclength_budget: f64,
    v_max: f64,
) -> Result<Vec<ManifoldBranch>> {
    let ((_, unstable), (_, stable)) = fp.saddle_directions()?;
    let mut out = Vec::with_capacity(4);
    for (kind, dir, t_end) in [
        (BranchKind::Unstable, unstable, cfg.max_time),
        (BranchKind::Stable, stable, -cfg.max_time),
    ] {
        for sign in [1i8, -1] {
            let x0 = fp.point.to_vec() + f64::from(sign) * EPS_MANIFOLD * dir;
            out.push(trace_branch(fp, sys, cfg, kind, sign, x0, t_end, arclength_budget, v_max)?);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn trace_branch(
    fp: &FixedPoint,
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
    kind: BranchKind,
    sign: i8,
    x0: Vec2,
    t_end: f64,
    budget: f64,
    v_max: f64,
) -> Result<ManifoldBranch> {
    let ode = StateOde { sys };
    let plain = IntegratorConfig {
        sample_dt: None,
        ..cfg.clone()
    };
    let mut points = vec![CylinderPoint::from_vec(x0)];
    let mut arclength = vec![0.0];
    let mut s = 0.0;
    Driver::new(&ode, &plain).run(0.0, [x0[0], x0[1]], t_end, None, |seg| {
        s += (seg.y1[0] - seg.y0[0]).hypot(seg.y1[1] - seg.y0[1]);
        points.push(CylinderPoint::new(seg.y1[0], seg.y1[1]));
        arclength.push(s);
        if s >= budget || seg.y1[1].abs() > v_max {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    Ok(ManifoldBranch {
        origin: fp.clone(),
        kind,
        sign,
        points,
        arclength,
    })
}

/// The saddle of the pendulum under constant torque `|u| < 1`.
pub fn pendulum_saddle(params: &PendulumParams) -> Result<FixedPoint> {
    find_fixed_points(params)?
        .into_iter()
        .find(|fp| fp.classification == Classification::Saddle)
        .ok_or(Error::NotASaddle)
}

/// Signed velocity gap on the section `θ = θ_s - π` between the unstable branch leaving the
/// saddle forwards (increasing θ) and the stable branch reaching it (traced backwards).
///
/// Zero signals a homoclinic loop. A positive gap means the unstable branch passes above the
/// stable one, i.e. it escapes the node's basin towards the rotating cycle. A branch that turns
/// back (`v` reaching zero) before the section counts as crossing at `v = 0`, which keeps the
/// sign of the gap monotone through the bifurcation.
pub fn homoclinic_gap(params: &PendulumParams, cfg: &IntegratorConfig) -> Result<f64> {
    let sys = Pendulum::new(params.clone())?;
    let fp = pendulum_saddle(params)?;
    let ((_, unstable), (_, stable)) = fp.saddle_directions()?;
    // lifted saddle angle in (0, 2π) so that θ_s ± π are the two lifts of the section
    let theta_s = PI - params.input.constant_value().unwrap_or(0.0).asin();
    let origin = Vec2::new(theta_s, 0.0);
    let ode = StateOde { sys: &sys };
    let v_escape = 1e3;

    let up = origin + EPS_MANIFOLD * unstable;
    let level = theta_s + PI;
    let v_up = match run_to_level(&ode, cfg, 0.0, [up[0], up[1]], cfg.max_time, |y| y[0] - level, |seg| {
        seg.y1[1] <= 0.0
    })? {
        LevelOutcome::Reached { y, .. } => y[1],
        LevelOutcome::Aborted { .. } => 0.0,
        LevelOutcome::Exhausted { .. } => return Err(Error::BranchEscaped),
    };

    // stable branch on the side θ < θ_s, reached with v > 0
    let down = origin - EPS_MANIFOLD * stable;
    let level = theta_s - PI;
    let mut escaped = false;
    let v_down = match run_to_level(&ode, cfg, 0.0, [down[0], down[1]], -cfg.max_time, |y| y[0] - level, |seg| {
        escaped = seg.y1[1].abs() > v_escape;
        escaped || seg.y1[1] <= 0.0
    })? {
        LevelOutcome::Reached { y, .. } => y[1],
        LevelOutcome::Aborted { .. } if !escaped => 0.0,
        _ => return Err(Error::BranchEscaped),
    };
    if v_up == 0.0 && v_down == 0.0 {
        return Err(Error::Inconclusive(
            "neither manifold branch reaches the section".into(),
        ));
    }
    Ok(v_up - v_down)
}
