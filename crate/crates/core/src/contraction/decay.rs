use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{analytic_vdot, eval_v, FinslerLyapunov, Projection};
use crate::model::{CylinderPoint, PlanarSystem, Tangent, Vec2};

/// Sampling of the unit sphere bundle for decay scans.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayGrid {
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    /// Velocities scanned at each angle; `[0]` for systems on the circle.
    pub v_values: Vec<f64>,
    /// Unit tangent directions per point; two (`±1`) for one-dimensional systems.
    pub n_directions: usize,
    pub t: f64,
}

impl DecayGrid {
    /// Angle-only grid for systems on the circle, endpoints included.
    pub fn circle(theta_min: f64, theta_max: f64, n_theta: usize) -> Self {
        Self {
            theta_min,
            theta_max,
            n_theta,
            v_values: vec![0.0],
            n_directions: 2,
            t: 0.0,
        }
    }

    pub fn cylinder(theta_min: f64, theta_max: f64, n_theta: usize, v_values: Vec<f64>) -> Self {
        Self {
            theta_min,
            theta_max,
            n_theta,
            v_values,
            n_directions: 64,
            t: 0.0,
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        linspace(self.theta_min, self.theta_max, self.n_theta)
    }

    fn directions(&self, one_dimensional: bool) -> Vec<Vec2> {
        if one_dimensional {
            return vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        }
        (0..self.n_directions)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / self.n_directions as f64;
                Vec2::new(a.cos(), a.sin())
            })
            .collect()
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecaySample {
    pub theta: f64,
    pub v: f64,
    pub dtheta: f64,
    pub dv: f64,
    pub vdot: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub grid: DecayGrid,
    pub samples: usize,
    pub min_vdot: f64,
    pub max_vdot: f64,
    pub argmin: DecaySample,
    pub argmax: DecaySample,
    /// Number of unit tangents with `V̇ ≥ 0` among those the metric measures.
    pub violation_count: usize,
    /// The first few violations in grid order.
    pub violations: Vec<DecaySample>,
    /// Every violation has `V̇ = 0` exactly: decay is non-strict rather than absent.
    pub non_strict: bool,
    /// Longest run of violation-free angles, as `[θ_lo, θ_hi]`.
    pub certified: Option<(f64, f64)>,
}

impl DecayReport {
    pub fn certifies(&self) -> bool {
        self.violation_count == 0
    }
}

const KEPT_VIOLATIONS: usize = 32;

/// Evaluates `V̇` on unit tangents over the grid, optionally projected first (horizontal decay).
/// Tangents the metric does not measure (`V = 0`) are skipped.
pub fn scan_decay(
    v: &FinslerLyapunov,
    sys: &dyn PlanarSystem,
    grid: &DecayGrid,
    projection: Option<Projection>,
) -> Result<DecayReport> {
    if grid.n_theta == 0 || grid.v_values.is_empty() {
        return Err(Error::InvalidConfig("decay grid is empty".into()));
    }
    let one_d = sys.dimension() == 1;
    let dirs = grid.directions(one_d);
    let v_values: &[f64] = if one_d { &[0.0] } else { &grid.v_values };
    let thetas = grid.thetas();

    let columns: Vec<Vec<DecaySample>> = thetas
        .par_iter()
        .map(|&theta| -> Result<Vec<DecaySample>> {
            let mut col = Vec::new();
            for &vel in v_values {
                let p = CylinderPoint::new(theta, vel);
                let proj = match projection {
                    Some(pr) => Some(pr.matrix(sys, p, grid.t)?),
                    None => None,
                };
                for d in &dirs {
                    let d = match proj {
                        Some(m) => {
                            let pd = m * d;
                            let n = pd.norm();
                            if n < 1e-12 {
                                continue;
                            }
                            pd / n
                        }
                        None => *d,
                    };
                    let tan = Tangent::from_vec(d);
                    if eval_v(v, p, tan)? == 0.0 {
                        continue;
                    }
                    let vdot = analytic_vdot(v, sys, p, tan, grid.t)?;
                    col.push(DecaySample {
                        theta: p.theta(),
                        v: vel,
                        dtheta: d[0],
                        dv: d[1],
                        vdot,
                    });
                }
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;

    let mut min_s: Option<DecaySample> = None;
    let mut max_s: Option<DecaySample> = None;
    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut all_zero = true;
    let mut samples = 0;
    let mut best_run: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for (i, col) in columns.iter().enumerate() {
        let mut clean = true;
        for s in col {
            samples += 1;
            if min_s.is_none_or(|m| s.vdot < m.vdot) {
                min_s = Some(*s);
            }
            if max_s.is_none_or(|m| s.vdot > m.vdot) {
                max_s = Some(*s);
            }
            if s.vdot >= 0.0 {
                clean = false;
                violation_count += 1;
                all_zero &= s.vdot == 0.0;
                if violations.len() < KEPT_VIOLATIONS {
                    violations.push(*s);
                }
            }
        }
        if clean {
            let start = *run_start.get_or_insert(i);
            if best_run.is_none_or(|(a, b)| i - start > b - a) {
                best_run = Some((start, i));
            }
        } else {
            run_start = None;
        }
    }
    let (min_s, max_s) = match (min_s, max_s) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidConfig(
                "decay grid contains no tangent measured by the metric".into(),
            ))
        }
    };
    Ok(DecayReport {
        grid: grid.clone(),
        samples,
        min_vdot: min_s.vdot,
        max_vdot: max_s.vdot,
        argmin: min_s,
        argmax: max_s,
        violation_count,
        violations,
        non_strict: violation_count > 0 && all_zero,
        certified: best_run.map(|(a, b)| (thetas[a], thetas[b])),
    })
}
