use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::projector_off;
use crate::integrate::{flow_prolonged, IntegratorConfig};
use crate::model::{PlanarSystem, Vec2};
use crate::orbits::LimitCycle;

#[derive(Clone, Debug, Serialize)]
pub struct HorizontalContraction {
    /// `|δ(T)| / |δ(0)|` for the transversal tangent after one period.
    pub factor: f64,
    /// `ln(factor) / T`.
    pub rate: f64,
    /// `|ρ₂|` of the cycle, for comparison.
    pub rho2_abs: f64,
    pub relative_difference: f64,
}

/// Transports the unit normal to the flow at the anchor once around the cycle, removing the
/// component along `f` at every sample of `cycle.samples`.
///
/// The flow direction is invariant under the linearization, so the transversal component evolves
/// on its own and returns scaled by the non-trivial multiplier.
pub fn horizontal_contraction_near_cycle(
    cycle: &LimitCycle,
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
) -> Result<HorizontalContraction> {
    horizontal_factor_from(cycle, sys, cfg, 1.0)
}

/// As [`horizontal_contraction_near_cycle`], starting from `sign` times the unit normal.
pub fn horizontal_factor_from(
    cycle: &LimitCycle,
    sys: &dyn PlanarSystem,
    cfg: &IntegratorConfig,
    sign: f64,
) -> Result<HorizontalContraction> {
    let times = &cycle.samples.times;
    if times.len() < 2 {
        return Err(Error::InvalidConfig("cycle carries no samples".into()));
    }
    let mut x = cycle.anchor.to_vec();
    let f0 = sys.field(x, times[0]);
    let equilibrium = || Error::EquilibriumPoint {
        theta: cycle.anchor.theta(),
        v: cycle.anchor.v(),
    };
    if f0.norm() < 1e-12 {
        return Err(equilibrium());
    }
    let mut d = sign * Vec2::new(-f0[1], f0[0]) / f0.norm();
    let mut log_growth = 0.0;
    for w in times.windows(2) {
        let (xn, dn) = flow_prolonged(sys, x, d, w[0], w[1], cfg)?;
        let p = projector_off(sys.field(xn, w[1])).ok_or_else(equilibrium)?;
        let dn = p * dn;
        let n = dn.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonFiniteState { t: w[1] });
        }
        log_growth += n.ln();
        d = dn / n;
        x = xn;
    }
    let factor = log_growth.exp();
    let rho2_abs = cycle.multipliers.1.abs();
    Ok(HorizontalContraction {
        factor,
        rate: log_growth / cycle.period,
        rho2_abs,
        relative_difference: (factor - rho2_abs).abs() / rho2_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pendulum;
    use crate::orbits::{find_limit_cycle, CycleOptions};

    #[test]
    fn transversal_factor_is_the_second_multiplier() {
        let p = Pendulum::constant(0.5, 1.5).unwrap();
        let cfg = IntegratorConfig::default();
        let c = find_limit_cycle(&p, &cfg, &CycleOptions::for_pendulum(0.5, 1.5)).unwrap();
        let h = horizontal_contraction_near_cycle(&c, &p, &cfg).unwrap();
        assert!(h.factor > 0.0 && h.factor < 1.0);
        assert!(h.relative_difference < 1e-6, "{h:?}");
        let back = horizontal_factor_from(&c, &p, &cfg, -1.0).unwrap();
        assert!((back.factor / h.factor - 1.0).abs() < 1e-9);
    }
}
