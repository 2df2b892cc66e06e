use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::model::PendulumParams;
use crate::orbits::homoclinic_gap;

/// Torque bracket searched for the homoclinic loop, kept off the saddle-node at `u = 1`.
const U_LO: f64 = 1e-3;
const U_HI: f64 = 0.999;

fn gap(k: f64, u: f64, cfg: &IntegratorConfig) -> Result<f64> {
    homoclinic_gap(&PendulumParams::constant(k, u)?, cfg)
}

/// `u_c(k)`: the torque at which the saddle's unstable branch closes onto its stable branch,
/// bisected until `|gap| ≤ 1e-6`.
pub fn homoclinic_torque(k: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let (mut lo, mut hi) = (U_LO, U_HI);
    let (g_lo, g_hi) = (gap(k, lo, cfg)?, gap(k, hi, cfg)?);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::NoSignChange { k });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let g = gap(k, mid, cfg)?;
        if g.abs() <= 1e-6 || hi - lo < 1e-14 {
            return Ok(mid);
        }
        if g > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: 100,
        residual: hi - lo,
    })
}

/// `(k, u_c(k))` for each `k`, or the first failure.
pub fn homoclinic_curve(ks: &[f64], cfg: &IntegratorConfig) -> Result<Vec<(f64, f64)>> {
    ks.iter().map(|&k| Ok((k, homoclinic_torque(k, cfg)?))).collect()
}

pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("k,u_c\n");
    for (k, u) in curve {
        out.push_str(&format!("{k:.16e},{u:.16e}\n"));
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalDamping {
    pub k_c: f64,
    /// `k_lo` still has a bistable band, `k_hi` does not.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Largest damping with a bistable band `(u_c(k), 1)`, bisected in `k ∈ [0.2, 3]` to width `1e-3`.
pub fn estimate_kc(cfg: &IntegratorConfig) -> Result<CriticalDamping> {
    let band = |k: f64| -> Result<bool> { Ok(gap(k, U_HI, cfg)? > 0.0) };
    let (mut lo, mut hi) = (0.2, 3.0);
    if !band(lo)? || band(hi)? {
        return Err(Error::Inconclusive(
            "the bistable band does not close inside k ∈ [0.2, 3]".into(),
        ));
    }
    let mut iterations = 0;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if band(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(CriticalDamping {
        k_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
    })
}
