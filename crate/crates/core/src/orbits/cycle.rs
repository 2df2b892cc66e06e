use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{
    flow_fundamental, fundamental_state, integrate_fundamental, run_to_level, split_fundamental,
    Fundamental, FundamentalOde, IntegratorConfig, LevelOutcome, Trajectory,
};
use crate::model::{CylinderPoint, PlanarSystem, Vec2};

/// A rotating periodic orbit located on the section `θ = θ*`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitCycle {
    pub anchor: CylinderPoint,
    pub period: f64,
    /// Net turns per period: `±1` for rotations.
    pub winding: i64,
    pub multipliers: (f64, f64),
    #[serde(skip)]
    pub monodromy: Fundamental,
    #[serde(skip)]
    pub samples: Trajectory,
}

#[derive(Clone, Debug)]
pub struct CycleOptions {
    pub section_theta: f64,
    /// Starting velocity on the section; its sign selects the rotation direction.
    pub guess_v: f64,
    /// Plain return-map iterations before Newton, which pull the guess into the basin.
    pub map_iterations: usize,
    pub max_newton: usize,
    /// Samples recorded over one period.
    pub samples: usize,
}

impl CycleOptions {
    pub fn new(guess_v: f64) -> Self {
        Self {
            section_theta: 0.0,
            guess_v,
            map_iterations: 8,
            max_newton: 50,
            samples: 512,
        }
    }

    /// The mean rotation speed `u/k` is a good starting velocity for a constant torque.
    pub fn for_pendulum(k: f64, u: f64) -> Self {
        let guess = if k > 0.0 { u / k } else { u.signum() * 2.0 };
        let guess = if guess.abs() < 0.5 { 0.5 * u.signum() } else { guess };
        Self::new(if guess == 0.0 { 0.5 } else { guess })
    }

    pub fn at_section(mut self, theta: f64) -> Self {
        self.section_theta = theta;
        self
    }
}

/// One revolution of the section map from `(θ*, v0)`.
pub(crate) struct Return {
    pub period: f64,
    pub v: f64,
    pub derivative: f64,
    pub monodromy: Fundamental,
}

fn first_return(
    sys: &dyn PlanarSystem,
    theta_star: f64,
    v0: f64,
    winding: i64,
    cfg: &IntegratorConfig,
) -> Result<Return> {
    let x0 = Vec2::new(theta_star, v0);
    let f0 = sys.field(x0, 0.0);
    if f0.norm() < 1e-10 {
        return Err(Error::NoCycle(format!("start ({theta_star}, {v0}) is an equilibrium")));
    }
    let level = theta_star + 2.0 * PI * winding as f64;
    let ode = FundamentalOde { sys };
    let y0 = fundamental_state(x0, Fundamental::identity());
    let dir = winding.signum() as f64;
    let mut sign_flips = 0usize;
    let outcome = run_to_level(
        &ode,
        cfg,
        0.0,
        y0,
        cfg.max_time,
        |y| dir * (y[0] - level),
        |seg| {
            if seg.y0[1] * seg.y1[1] < 0.0 {
                sign_flips += 1;
            }
            let f = sys.field(Vec2::new(seg.y1[0], seg.y1[1]), seg.t1);
            sign_flips >= 2 || f.norm() < 1e-10
        },
    )?;
    match outcome {
        LevelOutcome::Reached { t, y } => {
            let (x, fund) = split_fundamental(&y);
            let f = sys.field(x, t);
            let m = fund.matrix();
            let derivative = m[(1, 1)] - f[1] * m[(0, 1)] / f[0];
            Ok(Return {
                period: t,
                v: x[1],
                derivative,
                monodromy: fund,
            })
        }
        LevelOutcome::Aborted { y, .. } => Err(Error::NoCycle(format!(
            "trajectory from v = {v0} is trapped near θ = {:.6} instead of rotating",
            crate::model::wrap_angle(y[0])
        ))),
        LevelOutcome::Exhausted { .. } => Err(Error::NoCycle(format!(
            "no revolution completed within max_time = {}",
            cfg.max_time
        ))),
    }
}

/// Floquet multipliers from the monodromy matrix, `ρ₁` being the one nearest 1.
///
/// The larger root comes from the trace, the other from the exactly known determinant.
pub fn multipliers_of(m: &Fundamental) -> (f64, f64) {
    let tr = m.trace();
    let det = m.det();
    let disc = (tr * tr - 4.0 * det).max(0.0);
    let sign = if tr >= 0.0 { 1.0 } else { -1.0 };
    let big = 0.5 * (tr + sign * disc.sqrt());
    let small = if big != 0.0 { det / big } else { 0.0 };
    if (big - 1.0).abs() <= (small - 1.0).abs() {
        (big, small)
    } else {
        (small, big)
    }
}

/// Rotating limit cycle by scalar shooting on the section `θ = θ*`: a few return-map
/// iterations, then damped Newton on `P(v) - v` with `P'` from the fundamental matrix.
pub fn find_limit_cycle(
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
    opts: &CycleOptions,
) -> Result<LimitCycle> {
    let theta = opts.section_theta;
    let winding: i64 = if opts.guess_v >= 0.0 { 1 } else { -1 };
    let mut v = opts.guess_v;
    let mut ret = first_return(sys, theta, v, winding, cfg)?;
    for _ in 0..opts.map_iterations {
        if (ret.v - v).abs() < 1e-6 {
            break;
        }
        v = ret.v;
        ret = first_return(sys, theta, v, winding, cfg)?;
    }

    let tol = 1e-11;
    let mut residual = ret.v - v;
    let mut iterations = 0;
    while residual.abs() > tol * (1.0 + v.abs()) {
        if iterations == opts.max_newton {
            return Err(Error::NoConvergence {
                iterations,
                residual: residual.abs(),
            });
        }
        iterations += 1;
        let slope = ret.derivative - 1.0;
        let mut step = if slope.abs() > 1e-14 {
            -residual / slope
        } else {
            residual
        };
        let mut accepted = None;
        for _ in 0..12 {
            let trial_v = v + step;
            if let Ok(trial) = first_return(sys, theta, trial_v, winding, cfg) {
                let r = trial.v - trial_v;
                if r.abs() < residual.abs() {
                    accepted = Some((trial_v, trial, r));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((nv, nret, r)) => {
                v = nv;
                ret = nret;
                residual = r;
            }
            None => {
                // Newton stalled at round-off level; accept if already tight
                if residual.abs() <= 1e-9 {
                    break;
                }
                return Err(Error::NoConvergence {
                    iterations,
                    residual: residual.abs(),
                });
            }
        }
    }

    let anchor = CylinderPoint::new(theta, v);
    let period = ret.period;
    let sample_cfg = IntegratorConfig {
        sample_dt: Some(period / opts.samples as f64),
        ..cfg.clone()
    };
    let samples = integrate_fundamental(sys, anchor, &sample_cfg, (0.0, period))?;
    Ok(LimitCycle {
        anchor,
        period,
        winding,
        multipliers: multipliers_of(&ret.monodromy),
        monodromy: ret.monodromy,
        samples,
    })
}

/// Multipliers from a fresh integration of `Φ` once around the cycle.
pub fn floquet_multipliers(
    cycle: &LimitCycle,
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let (_, fund) = flow_fundamental(sys, cycle.anchor.to_vec(), 0.0, cycle.period, cfg)?;
    Ok(multipliers_of(&fund))
}

/// Wrapped distance between the anchor and its image after one period.
pub fn closure_error(cycle: &LimitCycle, sys: &dyn PlanarSystem, cfg: &IntegratorConfig) -> Result<f64> {
    let end = crate::integrate::flow_state(sys, cycle.anchor.to_vec(), 0.0, cycle.period, cfg)?;
    Ok(CylinderPoint::from_vec(end).distance(&cycle.anchor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pendulum;

    #[test]
    fn multipliers_of_diagonal_monodromy() {
        let f = Fundamental {
            angle: 0.0,
            log_r11: 0.0,
            log_r22: -40.0,
            shear: 0.0,
        };
        let (r1, r2) = multipliers_of(&f);
        assert_eq!(r1, 1.0);
        assert!((r2 / (-40.0f64).exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn light_damping_cycle() {
        let p = Pendulum::constant(0.5, 1.5).unwrap();
        let cfg = IntegratorConfig::default();
        let c = find_limit_cycle(&p, &cfg, &CycleOptions::for_pendulum(0.5, 1.5)).unwrap();
        assert_eq!(c.winding, 1);
        assert!(closure_error(&c, &p, &cfg).unwrap() <= 1e-8);
        assert!((c.multipliers.0 - 1.0).abs() <= 1e-4);
        let expected = (-0.5 * c.period).exp();
        assert!((c.multipliers.0 * c.multipliers.1 / expected - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn negative_torque_rotates_backwards() {
        let p = Pendulum::constant(0.5, -1.5).unwrap();
        let c = find_limit_cycle(&p, &IntegratorConfig::default(), &CycleOptions::for_pendulum(0.5, -1.5))
            .unwrap();
        assert_eq!(c.winding, -1);
        assert!(c.anchor.v() < 0.0);
    }

    #[test]
    fn no_cycle_in_fixed_point_regime() {
        let p = Pendulum::constant(3.0, 0.5).unwrap();
        for guess in [0.5, 2.0, 10.0] {
            let r = find_limit_cycle(&p, &IntegratorConfig::default(), &CycleOptions::new(guess));
            assert!(matches!(r, Err(Error::NoCycle(_))), "{r:?}");
        }
    }
}
