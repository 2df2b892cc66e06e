use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, FinslerLyapunov, DEFAULT_ETA};
use crate::integrate::{integrate_state, IntegratorConfig, Trajectory};
use crate::model::{wrapped_difference, CylinderPoint, PlanarSystem};

/// Distances below this are treated as converged and excluded from rate fits.
pub const DISTANCE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct PairConvergence {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Least-squares slope of `ln d` over the tail half of the horizon.
    pub rate: Option<f64>,
}

impl PairConvergence {
    pub fn terminal_distance(&self) -> f64 {
        *self.distances.last().expect("pair has samples")
    }

    /// After the first `transient_fraction` of the horizon, the distance never increases while
    /// it is above the convergence floor.
    pub fn eventually_decreasing(&self, transient_fraction: f64) -> bool {
        let t_end = *self.times.last().expect("pair has samples");
        let t_start = self.times[0] + transient_fraction * (t_end - self.times[0]);
        self.times
            .iter()
            .zip(self.distances.windows(2))
            .filter(|(t, w)| **t >= t_start && w[0] > DISTANCE_FLOOR)
            .all(|(_, w)| w[1] <= w[0] * (1.0 + 1e-9))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,distance\n");
        for (t, d) in self.times.iter().zip(&self.distances) {
            out.push_str(&format!("{t:.16e},{d:.16e}\n"));
        }
        out
    }
}

fn state_distance(v: &FinslerLyapunov, a: CylinderPoint, b: CylinderPoint) -> Result<f64> {
    match v {
        FinslerLyapunov::ConstantQuadratic(p) => {
            let d = nalgebra::Vector2::new(wrapped_difference(a.theta(), b.theta()), a.v() - b.v());
            Ok(d.dot(&(p * d)).sqrt())
        }
        _ => geodesic_distance(v, a.theta(), b.theta()),
    }
}

fn fit_rate(times: &[f64], distances: &[f64]) -> Option<f64> {
    let t_mid = 0.5 * (times[0] + times[times.len() - 1]);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(distances)
        .filter(|(t, d)| **t >= t_mid && **d > DISTANCE_FLOOR)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub(crate) fn pair_from_trajectories(
    v: &FinslerLyapunov,
    a: &Trajectory,
    b: &Trajectory,
) -> Result<PairConvergence> {
    if a.times != b.times {
        return Err(Error::MismatchedGrids);
    }
    let domain = v.angular_domain(DEFAULT_ETA);
    let mut distances = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let (p, q) = (a.states[i], b.states[i]);
        if p.theta().abs() > domain || q.theta().abs() > domain {
            return Err(Error::LeftRegion { t: a.times[i] });
        }
        distances.push(state_distance(v, p, q)?);
    }
    Ok(PairConvergence {
        rate: fit_rate(&a.times, &distances),
        times: a.times.clone(),
        distances,
    })
}

/// Integrates two solutions under the same input and records their distance in the metric of
/// `v` on a common grid (`cfg.sample_dt`, or 1/1000 of the horizon).
pub fn verify_pair_contraction(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    z0: CylinderPoint,
    v: &FinslerLyapunov,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<PairConvergence> {
    let cfg = IntegratorConfig {
        sample_dt: Some(cfg.sample_dt.unwrap_or(horizon / 1000.0)),
        ..cfg.clone()
    };
    let a = integrate_state(sys, x0, &cfg, (0.0, horizon))?;
    let b = integrate_state(sys, z0, &cfg, (0.0, horizon))?;
    pair_from_trajectories(v, &a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InputLaw, OverdampedPendulum};

    #[test]
    fn identical_starts_stay_together() {
        let sys = OverdampedPendulum::new(InputLaw::constant(0.0)).unwrap();
        let x = CylinderPoint::new(1.0, 0.0);
        let r = verify_pair_contraction(&sys, x, x, &FinslerLyapunov::WeightedAngle, &IntegratorConfig::default(), 5.0)
            .unwrap();
        assert!(r.distances.iter().all(|d| *d == 0.0));
        assert!(r.rate.is_none());
    }

    #[test]
    fn free_overdamped_pair_converges() {
        let sys = OverdampedPendulum::new(InputLaw::constant(0.0)).unwrap();
        let r = verify_pair_contraction(
            &sys,
            CylinderPoint::new(2.5, 0.0),
            CylinderPoint::new(-2.5, 0.0),
            &FinslerLyapunov::WeightedAngle,
            &IntegratorConfig::default(),
            30.0,
        )
        .unwrap();
        assert!(r.terminal_distance() < 1e-3);
        let after_one = r.times.iter().position(|t| *t >= 1.0).unwrap();
        assert!(r.distances[after_one..].windows(2).all(|w| w[1] <= w[0]));
        // both approach θ = 0 at the linearized rate -1
        assert!((r.rate.unwrap() + 1.0).abs() < 0.05);
    }

    #[test]
    fn rate_fit_recovers_exponential() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let d: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert!((fit_rate(&times, &d).unwrap() + 0.7).abs() < 1e-12);
    }
}
