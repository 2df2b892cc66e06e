use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::linspace;
use crate::error::{Error, Result};
use crate::integrate::{detect_crossings, flow_state, Direction, IntegratorConfig, Section};
use crate::model::{CylinderPoint, Pendulum, PendulumParams, PlanarSystem, Vec2};
use crate::orbits::{find_fixed_points, find_limit_cycle, CycleOptions, FixedPoint, LimitCycle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    FixedPointOnly,
    LimitCycleOnly,
    Bistable,
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::FixedPointOnly => "FixedPointOnly",
            Regime::LimitCycleOnly => "LimitCycleOnly",
            Regime::Bistable => "Bistable",
            Regime::Boundary => "Boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOutcome {
    FixedPoint,
    Cycle,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtlasCell {
    pub k: f64,
    pub u: f64,
    pub regime: Regime,
    pub has_cycle: bool,
    pub has_stable_fp: bool,
    pub period: Option<f64>,
    pub probes: Vec<(CylinderPoint, ProbeOutcome)>,
}

/// Integration horizon for probes and cycle search; it grows near `|u| = 1`, where the period of
/// the rotation diverges.
pub fn probe_horizon(k: f64, u: f64) -> f64 {
    let slow = (1.0 - u.abs()).abs().sqrt();
    let scale = if slow > 0.0 { (1.0 / slow).max(1.0) } else { f64::INFINITY };
    (40.0 * k.max(1.0 / k) * scale).min(1e4)
}

fn lands_on_cycle(sys: &dyn PlanarSystem, end: Vec2, cycle: &LimitCycle, cfg: &IntegratorConfig) -> Result<bool> {
    let direction = if cycle.winding > 0 {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    let section = Section::AngleCrossing {
        theta: cycle.anchor.theta(),
        direction,
    };
    let start = CylinderPoint::from_vec(end);
    let events = detect_crossings(sys, start, cfg, (0.0, 3.0 * cycle.period), section)?;
    Ok(events
        .iter()
        .find(|e| e.t > 0.0)
        .is_some_and(|e| (e.state.v() - cycle.anchor.v()).abs() <= 1e-4 * (1.0 + cycle.anchor.v().abs())))
}

fn probe(
    sys: &Pendulum,
    x0: CylinderPoint,
    horizon: f64,
    stable: Option<&FixedPoint>,
    cycle: Option<&LimitCycle>,
    cfg: &IntegratorConfig,
) -> Result<ProbeOutcome> {
    let end = flow_state(sys, x0.to_vec(), 0.0, horizon, cfg)?;
    if let Some(fp) = stable {
        if CylinderPoint::from_vec(end).distance(&fp.point) < 1e-4 {
            return Ok(ProbeOutcome::FixedPoint);
        }
    }
    if let Some(c) = cycle {
        if lands_on_cycle(sys, end, c, cfg)? {
            return Ok(ProbeOutcome::Cycle);
        }
    }
    Ok(ProbeOutcome::Undetermined)
}

/// Locates the attractors of the pendulum at `(k, u)` and checks them against eight basin probes:
/// four around the stable equilibrium (when there is one) and four at `|v| = 1.5(|u| + 1)/k`.
pub fn classify_cell(k: f64, u: f64, cfg: &IntegratorConfig) -> Result<AtlasCell> {
    if !(k > 0.0) {
        return Err(Error::InvalidConfig(format!("classify_cell needs k > 0, got {k}")));
    }
    let params = PendulumParams::constant(k, u)?;
    let sys = Pendulum::new(params.clone())?;
    let horizon = probe_horizon(k, u);
    let cfg = cfg.clone().with_max_time(horizon);

    let fps = find_fixed_points(&params)?;
    let stable = fps.iter().find(|fp| fp.is_stable());
    let spin = if u >= 0.0 { 1.0 } else { -1.0 };
    let v_high = 1.5 * (u.abs() + 1.0) / k;
    let cycle = match find_limit_cycle(&sys, &cfg, &CycleOptions::new(spin * v_high)) {
        Ok(c) if c.multipliers.1.abs() < 1.0 => Some(c),
        Ok(_) | Err(Error::NoCycle(_)) | Err(Error::NoConvergence { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut starts = Vec::with_capacity(8);
    if let Some(fp) = stable {
        let (th, v) = (fp.point.theta(), fp.point.v());
        for (dt, dv) in [(0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1)] {
            starts.push(CylinderPoint::new(th + dt, v + dv));
        }
    }
    for th in [0.0, FRAC_PI_2, PI, -FRAC_PI_2] {
        starts.push(CylinderPoint::new(th, spin * v_high));
    }
    let probes = starts
        .iter()
        .map(|&x| Ok((x, probe(&sys, x, horizon, stable, cycle.as_ref(), &cfg)?)))
        .collect::<Result<Vec<_>>>()?;

    let reached = |o: ProbeOutcome| probes.iter().any(|(_, p)| *p == o);
    let undetermined = reached(ProbeOutcome::Undetermined);
    let regime = match (stable.is_some(), cycle.is_some()) {
        _ if undetermined => Regime::Boundary,
        (true, true) if reached(ProbeOutcome::FixedPoint) && reached(ProbeOutcome::Cycle) => Regime::Bistable,
        (true, false) => Regime::FixedPointOnly,
        (false, true) => Regime::LimitCycleOnly,
        _ => Regime::Boundary,
    };
    Ok(AtlasCell {
        k,
        u,
        regime,
        has_cycle: cycle.is_some(),
        has_stable_fp: stable.is_some(),
        period: cycle.map(|c| c.period),
        probes,
    })
}

/// Sweep of the `(k, u)` plane: `k` log-spaced, `u` uniform, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub n_u: usize,
}

impl Default for AtlasGrid {
    fn default() -> Self {
        Self {
            k_min: 0.05,
            k_max: 4.0,
            n_k: 40,
            u_min: 0.0,
            u_max: 1.5,
            n_u: 60,
        }
    }
}

impl AtlasGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_min <= self.k_max) || self.n_k == 0 || self.n_u == 0 {
            return Err(Error::InvalidConfig(
                "atlas grid needs 0 < k_min <= k_max and non-empty axes".into(),
            ));
        }
        if !(self.u_min <= self.u_max) {
            return Err(Error::InvalidConfig("atlas grid needs u_min <= u_max".into()));
        }
        Ok(())
    }

    pub fn ks(&self) -> Vec<f64> {
        linspace(self.k_min.ln(), self.k_max.ln(), self.n_k)
            .into_iter()
            .map(f64::exp)
            .collect()
    }

    pub fn us(&self) -> Vec<f64> {
        linspace(self.u_min, self.u_max, self.n_u)
    }
}

/// Classifies every cell of the grid in parallel; the result is ordered by `k`, then `u`.
pub fn scan_atlas(grid: &AtlasGrid, cfg: &IntegratorConfig) -> Result<Vec<AtlasCell>> {
    grid.validate()?;
    let us = grid.us();
    let cells: Vec<(f64, f64)> = grid
        .ks()
        .into_iter()
        .flat_map(|k| us.iter().map(move |&u| (k, u)))
        .collect();
    cells
        .into_par_iter()
        .map(|(k, u)| classify_cell(k, u, cfg))
        .collect()
}

pub fn atlas_csv(cells: &[AtlasCell]) -> String {
    let mut out = String::from("k,u,regime,has_cycle,has_stable_fp,period\n");
    for c in cells {
        let period = c.period.map(|p| format!("{p:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{},{},{}\n",
            c.k,
            c.u,
            c.regime.as_str(),
            c.has_cycle,
            c.has_stable_fp,
            period
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_grows_towards_the_infinite_period_bifurcation() {
        assert_eq!(probe_horizon(1.0, 0.0), 40.0);
        assert!(probe_horizon(1.0, 0.99) > probe_horizon(1.0, 0.9));
        assert_eq!(probe_horizon(1.0, 1.0), 1e4);
        assert_eq!(probe_horizon(0.05, 0.0), 800.0);
    }

    #[test]
    fn log_spaced_k_axis_hits_both_ends() {
        let ks = AtlasGrid::default().ks();
        assert_eq!(ks.len(), 40);
        assert!((ks[0] - 0.05).abs() < 1e-15 && (ks[39] - 4.0).abs() < 1e-12);
        assert!((ks[1] / ks[0] - ks[39] / ks[38]).abs() < 1e-12);
    }

    #[test]
    fn large_damping_regimes() {
        let cfg = IntegratorConfig::default();
        let c = classify_cell(3.0, 0.5, &cfg).unwrap();
        assert_eq!(c.regime, Regime::FixedPointOnly, "{c:?}");
        assert_eq!(c.probes.len(), 8);
        let c = classify_cell(3.0, 1.5, &cfg).unwrap();
        assert_eq!(c.regime, Regime::LimitCycleOnly, "{c:?}");
        assert!(c.period.is_some() && c.probes.len() == 4);
    }
}
