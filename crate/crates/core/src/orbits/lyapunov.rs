use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{flow_prolonged, IntegratorConfig};
use crate::model::{CylinderPoint, PlanarSystem, Tangent};

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    /// `|λ(T) - λ(T/2)|`, a crude convergence band.
    pub band: f64,
    /// Running estimate `(t, Σ ln growth / t)` after every renormalization.
    pub trace: Vec<(f64, f64)>,
}

/// Largest Lyapunov exponent by propagating a tangent vector and renormalizing it every
/// `renorm_interval` time units.
pub fn max_lyapunov_exponent(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    d0: Tangent,
    cfg: &IntegratorConfig,
    horizon: f64,
    renorm_interval: f64,
) -> Result<LyapunovEstimate> {
    if !(renorm_interval > 0.0 && horizon >= 2.0 * renorm_interval) {
        return Err(Error::InvalidConfig(
            "horizon must cover at least two renormalization intervals".into(),
        ));
    }
    let mut d = d0.normalized().ok_or(Error::ZeroTangent)?.to_vec();
    let mut x = x0.to_vec();
    let steps = (horizon / renorm_interval).round() as usize;
    let mut sum = 0.0;
    let mut trace = Vec::with_capacity(steps);
    for i in 0..steps {
        let t0 = i as f64 * renorm_interval;
        let t1 = (i + 1) as f64 * renorm_interval;
        let (xn, dn) = flow_prolonged(sys, x, d, t0, t1, cfg)?;
        let growth = dn.norm();
        if !(growth > 0.0 && growth.is_finite()) {
            return Err(Error::NonFiniteState { t: t1 });
        }
        sum += growth.ln();
        d = dn / growth;
        x = xn;
        trace.push((t1, sum / t1));
    }
    let exponent = trace[steps - 1].1;
    let half = trace[steps / 2 - 1].1;
    Ok(LyapunovEstimate {
        exponent,
        band: (exponent - half).abs(),
        trace,
    })
}
