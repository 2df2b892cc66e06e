use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ConeFieldSpec;
use crate::integrate::{flow_fundamental, flow_prolonged, IntegratorConfig};
use crate::model::{CylinderPoint, Mat2, PlanarSystem, Vec2};

use super::invariance::StateGrid;

/// Projective step below which the iteration is converged.
pub const PF_TOL: f64 = 1e-8;

/// Backward points with `|v|` above this are treated as escaped.
const V_ESCAPE: f64 = 1e3;

/// Angle between the lines spanned by `a` and `b`, in `[0, π/2]`.
pub fn projective_distance(a: Vec2, b: Vec2) -> f64 {
    let cross = (a[0] * b[1] - a[1] * b[0]).abs();
    let dot = a.dot(&b).abs();
    cross.atan2(dot)
}

/// Representative of the line through `w` that points into the cone.
fn orient(cone: &ConeFieldSpec, p: CylinderPoint, w: Vec2) -> Vec2 {
    let a = cone.functionals(p);
    let w = w.normalize();
    if a[0].dot(&w) + a[1].dot(&w) < 0.0 {
        -w
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PFPoint {
    /// The grid point the iteration started from.
    pub origin: CylinderPoint,
    /// Where `w` is attached; equal to `origin` unless `forward_fallback` is set.
    pub location: CylinderPoint,
    pub w: Vec2,
    /// Projective step of the last push (or, in fallback mode, the angle between two pushed seeds).
    pub residual: f64,
    pub pushes: usize,
    /// Backward solutions escaped, so `w` was obtained by pushing seeds forward from `origin`.
    pub forward_fallback: bool,
}

/// Perron-Frobenius direction at `x`: seeds from the cone interior at `ψ_{-nτ}(x)` are carried
/// forward to `x` by the linearized flow until the direction stops moving.
pub fn pf_at_point(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    x: CylinderPoint,
    push_time: f64,
    max_pushes: usize,
    cfg: &IntegratorConfig,
) -> Result<PFPoint> {
    pf_at_time(sys, cone, x, 0.0, push_time, max_pushes, cfg)
}

/// As [`pf_at_point`] for the point `x` occupied at time `t`.
pub fn pf_at_time(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    x: CylinderPoint,
    t: f64,
    push_time: f64,
    max_pushes: usize,
    cfg: &IntegratorConfig,
) -> Result<PFPoint> {
    if !(push_time > 0.0) || max_pushes == 0 {
        return Err(Error::InvalidConfig(
            "push_time and max_pushes must be positive".into(),
        ));
    }
    // P maps tangents at the current backward point to tangents at x (up to scale)
    let mut p = Mat2::identity();
    let mut y = x.to_vec();
    let mut w = orient(cone, x, cone.interior_seed(x));
    let mut residual = f64::INFINITY;
    for n in 1..=max_pushes {
        let t0 = t - (n - 1) as f64 * push_time;
        let back = flow_fundamental(sys, y, t0, t0 - push_time, cfg);
        let (y_next, fund) = match back {
            Ok(r) if r.0[1].abs() <= V_ESCAPE => r,
            _ => return forward_fallback(sys, cone, x, t, push_time, max_pushes, cfg),
        };
        let forward = match fund.matrix().try_inverse() {
            Some(m) => m,
            None => return forward_fallback(sys, cone, x, t, push_time, max_pushes, cfg),
        };
        p *= forward;
        p /= p.norm();
        y = y_next;
        let seed = cone.interior_seed(CylinderPoint::from_vec(y));
        let w_next = orient(cone, x, p * seed);
        residual = projective_distance(w, w_next);
        w = w_next;
        if residual < PF_TOL {
            return Ok(PFPoint {
                origin: x,
                location: x,
                w,
                residual,
                pushes: n,
                forward_fallback: false,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_pushes,
        residual,
    })
}

fn forward_fallback(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    x: CylinderPoint,
    t: f64,
    push_time: f64,
    max_pushes: usize,
    cfg: &IntegratorConfig,
) -> Result<PFPoint> {
    let [mut a, mut b] = cone.boundary_rays(x);
    let mut y = x.to_vec();
    let mut spread = projective_distance(a, b);
    for n in 1..=max_pushes {
        let t0 = t + (n - 1) as f64 * push_time;
        let (ya, da) = flow_prolonged(sys, y, a, t0, t0 + push_time, cfg)?;
        let (_, db) = flow_prolonged(sys, y, b, t0, t0 + push_time, cfg)?;
        y = ya;
        a = da.normalize();
        b = db.normalize();
        spread = projective_distance(a, b);
        if spread < PF_TOL {
            let location = CylinderPoint::from_vec(y);
            return Ok(PFPoint {
                origin: x,
                location,
                w: orient(cone, location, a + b),
                residual: spread,
                pushes: n,
                forward_fallback: true,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_pushes,
        residual: spread,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PFField {
    pub push_time: f64,
    pub points: Vec<PFPoint>,
    /// Grid points where the iteration did not converge, with the residual reached.
    pub unconverged: Vec<(CylinderPoint, f64)>,
}

impl PFField {
    /// `theta,v,w_theta,w_v,residual`, one row per converged point at the point `w` is attached to.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,v,w_theta,w_v,residual\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.location.theta(),
                p.location.v(),
                p.w[0],
                p.w[1],
                p.residual
            ));
        }
        out
    }
}

pub fn pf_vector_field(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    grid: &StateGrid,
    push_time: f64,
    max_pushes: usize,
    cfg: &IntegratorConfig,
) -> Result<PFField> {
    let results: Vec<(CylinderPoint, Result<PFPoint>)> = grid
        .points()
        .into_par_iter()
        .map(|x| (x, pf_at_point(sys, cone, x, push_time, max_pushes, cfg)))
        .collect();
    let mut points = Vec::new();
    let mut unconverged = Vec::new();
    let mut worst = f64::INFINITY;
    for (x, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(Error::NoConvergence { residual, .. }) => {
                worst = worst.min(residual);
                unconverged.push((x, residual));
            }
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::NoConvergence {
            iterations: max_pushes,
            residual: worst,
        });
    }
    Ok(PFField {
        push_time,
        points,
        unconverged,
    })
}

/// `|sin ∠(f(x), w(x))|` at each converged point; `None` where `f` vanishes.
pub fn vector_field_alignment(sys: &dyn PlanarSystem, pf: &PFField) -> Vec<(CylinderPoint, Option<f64>)> {
    pf.points
        .iter()
        .map(|p| {
            let f = sys.field(p.location.to_vec(), 0.0);
            let s = (f.norm() >= 1e-12).then(|| projective_distance(f, p.w).sin());
            (p.location, s)
        })
        .collect()
}

/// Misalignment `|sin ∠(f, w)|` along the solution from `x0`, with `w` the interior seed carried
/// forward by the linearized flow and renormalized every `push_time`. Entries are `(t, value)`,
/// the value being `None` where `f` vanishes.
pub fn misalignment_along(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    x0: CylinderPoint,
    push_time: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, Option<f64>)>> {
    let mut x = x0.to_vec();
    let mut d = cone.interior_seed(x0).normalize();
    let steps = (horizon / push_time).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let sine = |x: Vec2, d: Vec2, t: f64| {
        let f = sys.field(x, t);
        (f.norm() >= 1e-12).then(|| projective_distance(f, d).sin())
    };
    out.push((0.0, sine(x, d, 0.0)));
    for i in 0..steps {
        let (t0, t1) = (i as f64 * push_time, (i + 1) as f64 * push_time);
        let (xn, dn) = flow_prolonged(sys, x, d, t0, t1, cfg)?;
        x = xn;
        d = dn.normalize();
        out.push((t1, sine(x, d, t1)));
    }
    Ok(out)
}

/// Pushes a converged `w(x)` (at time 0) once through `∂ψ_τ` and returns its projective distance
/// to the field computed afresh at `ψ_τ(x)`.
pub fn pf_consistency(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    pf: &PFPoint,
    push_time: f64,
    max_pushes: usize,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let (y, pushed) = flow_prolonged(sys, pf.location.to_vec(), pf.w, 0.0, push_time, cfg)?;
    let at = pf_at_time(sys, cone, CylinderPoint::from_vec(y), push_time, push_time, max_pushes, cfg)?;
    Ok(projective_distance(pushed, at.w))
}
