use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ConeFieldSpec, TOL_CONE};
use crate::integrate::{integrate_prolonged, IntegratorConfig};
use crate::model::{CylinderPoint, PlanarSystem, Tangent, Vec2};

/// Minimum interior margin at `t = τ` required for a strict verdict.
pub const STRICT_MARGIN: f64 = 1e-6;

/// Sub-samples of `[0, τ]` at which pushed rays are tested.
const FINITE_SAMPLES: usize = 20;

/// Points on the cylinder: `n_theta` angles covering `[-π, π)` times `n_v` velocities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateGrid {
    pub n_theta: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
}

impl StateGrid {
    pub fn new(n_theta: usize, v_min: f64, v_max: f64, n_v: usize) -> Result<Self> {
        if n_theta == 0 || n_v == 0 || !(v_min <= v_max) {
            return Err(Error::InvalidConfig("state grid is empty".into()));
        }
        Ok(Self {
            n_theta,
            v_min,
            v_max,
            n_v,
        })
    }

    /// 720 angles by 13 velocities in `[-3, 3]`.
    pub fn pendulum_default() -> Self {
        Self {
            n_theta: 720,
            v_min: -3.0,
            v_max: 3.0,
            n_v: 13,
        }
    }

    /// Row-major in `θ`, then `v`. Contains `θ = 0` whenever `n_theta` is even.
    pub fn points(&self) -> Vec<CylinderPoint> {
        let vs = crate::contraction::linspace(self.v_min, self.v_max, self.n_v);
        (0..self.n_theta)
            .flat_map(|i| {
                let th = -PI + 2.0 * PI * i as f64 / self.n_theta as f64;
                vs.iter().map(move |&v| CylinderPoint::new(th, v))
            })
            .collect()
    }
}

/// A tangent in the cone at `(θ, v)` whose image under the linearized flow leaves the cone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub theta: f64,
    pub v: f64,
    pub ray: usize,
    pub dtheta: f64,
    pub dv: f64,
    pub t: f64,
    /// Where the solution is at time `t`.
    pub theta_t: f64,
    pub v_t: f64,
    pub pushed_dtheta: f64,
    pub pushed_dv: f64,
    /// `minᵢ aᵢ·δ/|δ|` of the pushed tangent; below `-TOL_CONE`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    StrictlyInvariant { min_margin: f64 },
    MarginallyInvariant,
    Violated { witness: Witness },
}

impl Verdict {
    pub fn is_strict(&self) -> bool {
        matches!(self, Verdict::StrictlyInvariant { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::StrictlyInvariant { .. } => "StrictlyInvariant",
            Verdict::MarginallyInvariant => "MarginallyInvariant",
            Verdict::Violated { .. } => "Violated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointMargins {
    pub theta: f64,
    pub v: f64,
    /// `aᵢ·J rᵢ + ȧᵢ·rᵢ` for each boundary ray `rᵢ` (the inward rate).
    pub infinitesimal: [f64; 2],
    /// Normalized cone margin of `∂ψ_τ rᵢ` at `ψ_τ(x)`.
    pub finite: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub k: Option<f64>,
    pub u: Option<f64>,
    pub grid: StateGrid,
    pub tau: f64,
    pub min_infinitesimal_margin: f64,
    /// `(θ, v, ray)` where the infinitesimal margin is smallest.
    pub argmin_infinitesimal: (f64, f64, usize),
    pub min_finite_margin: f64,
    pub verdict: Verdict,
    pub points: Vec<PointMargins>,
}

/// Rate of change of the functional `aᵢ` along the flow, by central differences.
fn functional_rate(cone: &ConeFieldSpec, p: CylinderPoint, f: Vec2, i: usize) -> Vec2 {
    match cone {
        ConeFieldSpec::Constant(_) => Vec2::zeros(),
        ConeFieldSpec::StateDependent(_) => {
            let h = 1e-6;
            let x = p.to_vec();
            let ahead = cone.functionals(CylinderPoint::from_vec(x + h * f))[i];
            let behind = cone.functionals(CylinderPoint::from_vec(x - h * f))[i];
            (ahead - behind) / (2.0 * h)
        }
    }
}

/// Inward rates `aᵢ·J rᵢ + ȧᵢ·rᵢ` of both boundary rays at `p`.
pub fn infinitesimal_margins(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    p: CylinderPoint,
    t: f64,
) -> [f64; 2] {
    let a = cone.functionals(p);
    let rays = cone.boundary_rays(p);
    let j = sys.jacobian(p.to_vec(), t);
    let f = sys.field(p.to_vec(), t);
    [0, 1].map(|i| a[i].dot(&(j * rays[i])) + functional_rate(cone, p, f, i).dot(&rays[i]))
}

fn normalized_margin(cone: &ConeFieldSpec, p: CylinderPoint, d: Vec2) -> f64 {
    let a = cone.functionals(p);
    let n = d.norm();
    (a[0].dot(&d) / n).min(a[1].dot(&d) / n)
}

struct RayPush {
    at_tau: f64,
    witness: Option<Witness>,
}

fn push_ray(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    p: CylinderPoint,
    ray: usize,
    tau: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<RayPush> {
    let r = cone.boundary_rays(p)[ray];
    let cfg = cfg.clone().with_sample_dt(tau / samples as f64);
    let tr = integrate_prolonged(sys, p, Tangent::from_vec(r), &cfg, (0.0, tau))?;
    let tangents = tr.tangents.as_ref().expect("prolonged trajectory carries tangents");
    let mut witness: Option<Witness> = None;
    let mut at_tau = f64::NAN;
    for (j, tangent) in tangents.iter().enumerate().skip(1) {
        let (q, d) = (tr.states[j], tangent.to_vec());
        let m = normalized_margin(cone, q, d);
        at_tau = m;
        if m < -TOL_CONE && witness.is_none_or(|w| m < w.margin) {
            witness = Some(Witness {
                theta: p.theta(),
                v: p.v(),
                ray,
                dtheta: r[0],
                dv: r[1],
                t: tr.times[j],
                theta_t: q.theta(),
                v_t: q.v(),
                pushed_dtheta: d[0],
                pushed_dv: d[1],
                margin: m,
            });
        }
    }
    Ok(RayPush { at_tau, witness })
}

/// Two-level check of `∂ψ_t(x) 𝒦(x) ⊆ 𝒦(ψ_t(x))` over the grid: inward rates of the boundary
/// rays, then the rays pushed through the linearized flow up to `τ`.
pub fn verify_cone_invariance(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    grid: &StateGrid,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<InvarianceReport> {
    if sys.dimension() != 2 {
        return Err(Error::InvalidConfig(
            "cone invariance needs a two-dimensional system".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig("tau must be positive".into()));
    }
    let points = grid.points();
    let per_point: Vec<(PointMargins, Option<Witness>)> = points
        .par_iter()
        .map(|&p| -> Result<_> {
            cone.validate_at(p)?;
            let infinitesimal = infinitesimal_margins(sys, cone, p, 0.0);
            let mut finite = [0.0; 2];
            let mut witness: Option<Witness> = None;
            for (ray, slot) in finite.iter_mut().enumerate() {
                let push = push_ray(sys, cone, p, ray, tau, FINITE_SAMPLES, cfg)?;
                *slot = push.at_tau;
                if let Some(w) = push.witness {
                    if witness.is_none_or(|o| w.margin < o.margin) {
                        witness = Some(w);
                    }
                }
            }
            let pm = PointMargins {
                theta: p.theta(),
                v: p.v(),
                infinitesimal,
                finite,
            };
            Ok((pm, witness))
        })
        .collect::<Result<_>>()?;

    let mut min_inf = f64::INFINITY;
    let mut argmin = (0.0, 0.0, 0);
    let mut min_fin = f64::INFINITY;
    let mut witness: Option<Witness> = None;
    for (pm, w) in &per_point {
        for ray in 0..2 {
            if pm.infinitesimal[ray] < min_inf {
                min_inf = pm.infinitesimal[ray];
                argmin = (pm.theta, pm.v, ray);
            }
            min_fin = min_fin.min(pm.finite[ray]);
        }
        if let Some(w) = w {
            if witness.is_none_or(|o| w.margin < o.margin) {
                witness = Some(*w);
            }
        }
    }
    // an inward rate below zero that the τ-grid missed still leaves the cone right away
    if witness.is_none() && min_inf < -TOL_CONE {
        let p = CylinderPoint::new(argmin.0, argmin.1);
        let short = tau / (FINITE_SAMPLES as f64 * 1000.0);
        witness = push_ray(sys, cone, p, argmin.2, short, 1, cfg)?.witness;
    }
    let verdict = match witness {
        Some(witness) => Verdict::Violated { witness },
        None if min_inf > TOL_CONE && min_fin >= STRICT_MARGIN => Verdict::StrictlyInvariant {
            min_margin: min_inf,
        },
        None => Verdict::MarginallyInvariant,
    };
    let (k, u) = match sys.as_pendulum() {
        Some(p) => (Some(p.k()), p.input().constant_value()),
        None => (None, None),
    };
    Ok(InvarianceReport {
        k,
        u,
        grid: grid.clone(),
        tau,
        min_infinitesimal_margin: min_inf,
        argmin_infinitesimal: argmin,
        min_finite_margin: min_fin,
        verdict,
        points: per_point.into_iter().map(|(pm, _)| pm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pendulum;

    #[test]
    fn pendulum_rates_follow_the_damping() {
        let cone = ConeFieldSpec::pendulum_default();
        for k in [0.0, 1.0, 2.0, 3.5] {
            let p = Pendulum::constant(k, 0.3).unwrap();
            for th in [-2.0, 0.0, 1.0, 3.0] {
                let m = infinitesimal_margins(&p, &cone, CylinderPoint::new(th, 0.7), 0.0);
                assert_eq!(m[0], 1.0);
                assert!((m[1] - (k - 1.0 - th.cos())).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grid_contains_the_bottom() {
        let pts = StateGrid::pendulum_default().points();
        assert_eq!(pts.len(), 720 * 13);
        assert!(pts.iter().any(|p| p.theta() == 0.0 && p.v() == 0.0));
    }

    #[test]
    fn verdicts_across_the_critical_damping() {
        let cone = ConeFieldSpec::pendulum_default();
        let grid = StateGrid::new(90, -3.0, 3.0, 7).unwrap();
        let cfg = IntegratorConfig::default();
        let report = |k: f64| {
            verify_cone_invariance(&Pendulum::constant(k, 0.0).unwrap(), &cone, &grid, 1.0, &cfg).unwrap()
        };
        let r3 = report(3.0);
        assert!(r3.verdict.is_strict(), "{:?}", r3.verdict);
        assert!((r3.min_infinitesimal_margin - 1.0).abs() < 1e-12);
        let r2 = report(2.0);
        assert_eq!(r2.verdict, Verdict::MarginallyInvariant);
        assert!(r2.min_infinitesimal_margin.abs() <= 1e-9);
        match report(1.0).verdict {
            Verdict::Violated { witness } => {
                assert!(witness.margin < -TOL_CONE);
                assert_eq!(witness.ray, 1);
            }
            v => panic!("{v:?}"),
        }
    }
}
