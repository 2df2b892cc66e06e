use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cone_membership, ConeFieldSpec, ConeStatus};
use crate::integrate::{detect_crossings, integrate_state, Direction, IntegratorConfig, Section};
use crate::model::{CylinderPoint, Pendulum, PendulumParams, PlanarSystem, Tangent};
use crate::orbits::{find_fixed_points, find_limit_cycle, homoclinic_gap, pendulum_saddle, CycleOptions, LimitCycle};

use super::invariance::{verify_cone_invariance, StateGrid, Verdict};
use super::pf::{misalignment_along, pf_at_point, projective_distance};

/// Default inflation of the trapping band.
pub const DEFAULT_RHO: f64 = 1.1;

/// The forward-invariant band `|v| ≤ ρ(|u| + 1)/k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrappingRegion {
    pub v_bound: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Corollary2 {
    Certified {
        region: TrappingRegion,
        cycle: LimitCycle,
    },
    NotCertified {
        reason: String,
    },
}

impl Corollary2 {
    pub fn is_certified(&self) -> bool {
        matches!(self, Corollary2::Certified { .. })
    }
}

fn not_certified(reason: impl Into<String>) -> Result<Corollary2> {
    Ok(Corollary2::NotCertified {
        reason: reason.into(),
    })
}

/// Limit-cycle certificate for the pendulum under constant torque: no fixed points, strict cone
/// invariance on the trapping band, the band is forward invariant, and after a transient the
/// vector field points into the interior of the cone. When all hold the cycle is located.
pub fn certify_corollary2(
    params: &PendulumParams,
    cone: &ConeFieldSpec,
    cfg: &IntegratorConfig,
    rho: f64,
) -> Result<Corollary2> {
    let u = params.input.constant_value().ok_or_else(|| {
        Error::InvalidConfig("the certificate needs a constant torque".into())
    })?;
    let k = params.k;
    if !(rho > 1.0) {
        return Err(Error::InvalidConfig("rho must exceed 1".into()));
    }
    if !find_fixed_points(params)?.is_empty() {
        return not_certified("fixed points exist");
    }
    if k <= 0.0 {
        return not_certified("no trapping band without damping");
    }
    let sys = Pendulum::new(params.clone())?;
    let v_bound = rho * (u.abs() + 1.0) / k;

    let grid = StateGrid::new(360, -v_bound, v_bound, 9)?;
    let inv = verify_cone_invariance(&sys, cone, &grid, 1.0, cfg)?;
    if !inv.verdict.is_strict() {
        return not_certified(format!(
            "cone not strictly invariant ({}, min inward rate {:.6})",
            inv.verdict.name(),
            inv.min_infinitesimal_margin
        ));
    }

    // v̇ points inwards on both edges of the band
    let inward = (0..720).all(|i| {
        let th = -PI + 2.0 * PI * i as f64 / 720.0;
        let top = sys.field(CylinderPoint::new(th, v_bound).to_vec(), 0.0)[1];
        let bottom = sys.field(CylinderPoint::new(th, -v_bound).to_vec(), 0.0)[1];
        top < 0.0 && bottom > 0.0
    });
    if !inward {
        return not_certified("trapping band is not forward invariant");
    }

    // after the transient every probe has f(x) inside the cone
    let transient = 10.0 + 30.0 / k;
    let window = 20.0;
    let probe_cfg = cfg.clone().with_sample_dt(0.05);
    for &th in &[0.0, 0.5 * PI, -PI, -0.5 * PI] {
        for &v in &[v_bound, -v_bound] {
            let tr = integrate_state(&sys, CylinderPoint::new(th, v), &probe_cfg, (0.0, transient + window))?;
            for (t, p) in tr.times.iter().zip(&tr.states) {
                if *t < transient {
                    continue;
                }
                let f = Tangent::from_vec(sys.field(p.to_vec(), *t));
                let m = cone_membership(cone, *p, f)?;
                if m.status != ConeStatus::Interior {
                    return not_certified(format!(
                        "f is not inside the cone at ({:.4}, {:.4}) after the transient",
                        p.theta(),
                        p.v()
                    ));
                }
            }
        }
    }

    let cycle = find_limit_cycle(&sys, cfg, &CycleOptions::for_pendulum(k, u))?;
    if cycle.multipliers.1.abs() >= 1.0 {
        return not_certified("located cycle is not attractive");
    }
    Ok(Corollary2::Certified {
        region: TrappingRegion { v_bound, rho },
        cycle,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OmegaLimit {
    FixedPoint { point: CylinderPoint },
    Cycle { period: f64, anchor: CylinderPoint, misalignment: f64 },
}

/// Raw case-(ii) diagnostics: the solution recurs but its velocity does not line up with the
/// Perron-Frobenius direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseIIDiagnostics {
    pub terminal_field_norm: f64,
    pub terminal_misalignment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum Dichotomy {
    CaseI { limit: OmegaLimit },
    CaseII { diagnostics: CaseIIDiagnostics },
}

/// `|f|` below this at the end of the horizon marks convergence to an equilibrium.
const FIXED_POINT_SPEED: f64 = 1e-6;
const RECURRENCE_TOL: f64 = 1e-6;
const ALIGNMENT_TOL: f64 = 1e-3;

/// Classifies the ω-limit set of the solution through `x0`: an equilibrium when the speed dies
/// out, a cycle when section returns repeat and `f` lines up with the transported cone seed.
pub fn dichotomy_classify(
    sys: &dyn PlanarSystem,
    cone: &ConeFieldSpec,
    x0: CylinderPoint,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<Dichotomy> {
    let tr = integrate_state(sys, x0, &cfg.clone().with_sample_dt(horizon / 1000.0), (0.0, horizon))?;
    let end = tr.last();
    let speed = sys.field(end.to_vec(), horizon).norm();
    if speed < FIXED_POINT_SPEED {
        return Ok(Dichotomy::CaseI {
            limit: OmegaLimit::FixedPoint { point: end },
        });
    }

    // returns to the angle section through the end point, beyond the horizon
    let f_end = sys.field(end.to_vec(), horizon);
    let direction = if f_end[0] >= 0.0 {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    let section = Section::AngleCrossing {
        theta: end.theta(),
        direction,
    };
    let span = (horizon, 2.0 * horizon);
    let returns: Vec<_> = detect_crossings(sys, end, cfg, span, section)?
        .into_iter()
        .filter(|e| e.t > horizon + 1e-9)
        .collect();
    let recurrent = returns.len() >= 2
        && returns
            .windows(2)
            .all(|w| (w[1].state.v() - w[0].state.v()).abs() <= RECURRENCE_TOL * (1.0 + w[0].state.v().abs()));
    if !recurrent {
        return Err(Error::Inconclusive(format!(
            "no recurrence established within horizon {horizon}"
        )));
    }
    let period = returns[1].t - returns[0].t;
    let push = period.min(1.0);
    let series = misalignment_along(sys, cone, end, push, horizon, cfg)?;
    let misalignment = series
        .iter()
        .rev()
        .take(((period / push).ceil() as usize).max(1))
        .filter_map(|(_, s)| *s)
        .fold(0.0, f64::max);
    if misalignment <= ALIGNMENT_TOL {
        Ok(Dichotomy::CaseI {
            limit: OmegaLimit::Cycle {
                period,
                anchor: returns[0].state,
                misalignment,
            },
        })
    } else {
        Ok(Dichotomy::CaseII {
            diagnostics: CaseIIDiagnostics {
                terminal_field_norm: speed,
                terminal_misalignment: misalignment,
            },
        })
    }
}

/// Homoclinic gap, cone verdict and Perron-Frobenius tangency at the saddle, side by side.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub k: f64,
    pub u: f64,
    pub gap: f64,
    /// `|gap| ≤ HOMOCLINIC_TOL`.
    pub homoclinic: bool,
    pub invariance: Verdict,
    /// `|sin|` of the angle between the unstable eigenvector and `w` at the saddle.
    pub pf_tangency: f64,
    /// A homoclinic loop tangent to `w` under strict invariance, which cannot happen.
    pub forbidden: bool,
}

pub const HOMOCLINIC_TOL: f64 = 1e-5;

pub fn homoclinic_obstruction_check(
    params: &PendulumParams,
    cone: &ConeFieldSpec,
    cfg: &IntegratorConfig,
) -> Result<ObstructionReport> {
    let u = params.input.constant_value().ok_or_else(|| {
        Error::InvalidConfig("the obstruction check needs a constant torque".into())
    })?;
    let sys = Pendulum::new(params.clone())?;
    let gap = homoclinic_gap(params, cfg)?;
    let homoclinic = gap.abs() <= HOMOCLINIC_TOL;
    let inv = verify_cone_invariance(&sys, cone, &StateGrid::pendulum_default(), 1.0, cfg)?;
    let saddle = pendulum_saddle(params)?;
    let ((_, unstable), _) = saddle.saddle_directions()?;
    let w = pf_at_point(&sys, cone, saddle.point, 1.0, 200, cfg)?;
    let pf_tangency = projective_distance(unstable, w.w).sin();
    let forbidden = homoclinic && pf_tangency <= 1e-4 && inv.verdict.is_strict();
    Ok(ObstructionReport {
        k: params.k,
        u,
        gap,
        homoclinic,
        invariance: inv.verdict,
        pf_tangency,
        forbidden,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_edges_push_inwards_for_the_default_rho() {
        let sys = Pendulum::constant(3.0, 1.2).unwrap();
        let vb = DEFAULT_RHO * 2.2 / 3.0;
        for th in [-3.0, -1.0, 0.0, 1.5, 3.1] {
            assert!(sys.field(CylinderPoint::new(th, vb).to_vec(), 0.0)[1] < 0.0);
            assert!(sys.field(CylinderPoint::new(th, -vb).to_vec(), 0.0)[1] > 0.0);
        }
    }

    #[test]
    fn fixed_point_regime_is_not_certified() {
        let r = certify_corollary2(
            &PendulumParams::constant(3.0, 0.5).unwrap(),
            &ConeFieldSpec::pendulum_default(),
            &IntegratorConfig::default(),
            DEFAULT_RHO,
        )
        .unwrap();
        match r {
            Corollary2::NotCertified { reason } => assert!(reason.contains("fixed points")),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn saddle_start_is_its_own_limit() {
        let sys = Pendulum::constant(3.0, 0.0).unwrap();
        let d = dichotomy_classify(
            &sys,
            &ConeFieldSpec::pendulum_default(),
            CylinderPoint::new(PI, 0.0),
            &IntegratorConfig::default(),
            50.0,
        )
        .unwrap();
        match d {
            Dichotomy::CaseI {
                limit: OmegaLimit::FixedPoint { point },
            } => assert!(point.distance(&CylinderPoint::new(PI, 0.0)) < 1e-8, "{point:?}"),
            d => panic!("{d:?}"),
        }
    }
}
