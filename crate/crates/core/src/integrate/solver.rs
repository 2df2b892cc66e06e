//! Explicit Runge-Kutta drivers over fixed-size state arrays.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side `ẏ = F(t, y)` of an `N`-dimensional ODE.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// Components that are lifted angles; their error weight is capped at `π` so that
    /// many windings do not loosen the absolute accuracy.
    fn angular(&self) -> [bool; N] {
        [false; N]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    FixedRk4 {
        h: f64,
    },
    AdaptiveRk45 {
        rel_tol: f64,
        abs_tol: f64,
        h_min: f64,
        h_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Upper bound on the time span of open-ended searches (cycles, probes, manifolds).
    pub max_time: f64,
    /// When set, recorded samples sit on the uniform grid `t0 + i·sample_dt`; otherwise every
    /// accepted step is recorded.
    pub sample_dt: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk45 {
                rel_tol: 1e-9,
                abs_tol: 1e-9,
                h_min: 1e-12,
                h_max: 0.1,
            },
            max_time: 1e4,
            sample_dt: None,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(h: f64) -> Self {
        Self {
            method: Method::FixedRk4 { h },
            ..Self::default()
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        let mut cfg = Self::default();
        if let Method::AdaptiveRk45 {
            rel_tol: r,
            abs_tol: a,
            ..
        } = &mut cfg.method
        {
            *r = rel_tol;
            *a = abs_tol;
        }
        cfg
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = Some(dt);
        self
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match self.method {
            Method::FixedRk4 { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return bad("fixed step h must be > 0");
                }
            }
            Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                h_min,
                h_max,
            } => {
                if !(rel_tol > 0.0 && abs_tol > 0.0) {
                    return bad("rel_tol and abs_tol must be > 0");
                }
                if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) {
                    return bad("step bounds must satisfy 0 < h_min <= h_max");
                }
            }
        }
        if !(self.max_time > 0.0) {
            return bad("max_time must be > 0");
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("sample_dt must be > 0");
            }
        }
        Ok(())
    }
}

/// One accepted step.
#[derive(Clone, Copy, Debug)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    /// `t1` lies on the sampling grid (or is the final time when no grid is set).
    pub on_grid: bool,
}

pub enum Flow {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug)]
pub struct RunEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub stopped: bool,
    pub last_h: f64,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct Driver<'a, S, const N: usize> {
    sys: &'a S,
    cfg: &'a IntegratorConfig,
}

impl<'a, S: OdeSystem<N>, const N: usize> Driver<'a, S, N> {
    pub fn new(sys: &'a S, cfg: &'a IntegratorConfig) -> Self {
        Self { sys, cfg }
    }

    fn dp_step(&self, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N]) {
        let mut k = [[0.0; N]; 7];
        k[0] = self.sys.rhs(t, y);
        for s in 1..7 {
            let mut ys = *y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                *yi += h * acc;
            }
            k[s] = self.sys.rhs(t + C[s] * h, &ys);
        }
        // stage 7 is evaluated at the 5th-order solution itself
        let mut y5 = *y;
        let mut err = [0.0; N];
        for i in 0..N {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += A[6][j] * k[j][i];
            }
            y5[i] += h * acc;
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            err[i] = h * e;
        }
        (y5, err)
    }

    fn rk4_step(&self, t: f64, y: &[f64; N], h: f64) -> [f64; N] {
        let add = |y: &[f64; N], k: &[f64; N], s: f64| {
            let mut out = *y;
            for i in 0..N {
                out[i] += s * k[i];
            }
            out
        };
        let k1 = self.sys.rhs(t, y);
        let k2 = self.sys.rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h));
        let k3 = self.sys.rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h));
        let k4 = self.sys.rhs(t + h, &add(y, &k3, h));
        let mut out = *y;
        for i in 0..N {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// State at `t` reached by a single step from `(t0, y0)`. Used as the continuous extension
    /// inside an accepted step, where it is at least as accurate as the step itself.
    pub fn step_to(&self, t0: f64, y0: &[f64; N], t: f64) -> [f64; N] {
        let h = t - t0;
        if h == 0.0 {
            return *y0;
        }
        match self.cfg.method {
            Method::FixedRk4 { .. } => self.rk4_step(t0, y0, h),
            Method::AdaptiveRk45 { .. } => self.dp_step(t0, y0, h).0,
        }
    }

    fn error_norm(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N], rtol: f64, atol: f64) -> f64 {
        let angular = self.sys.angular();
        let mut acc = 0.0;
        for i in 0..N {
            let mut mag = y0[i].abs().max(y1[i].abs());
            if angular[i] {
                mag = mag.min(PI);
            }
            let sc = atol + rtol * mag;
            acc += (err[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step(&self, t0: f64, y0: &[f64; N], rtol: f64, atol: f64, h_max: f64) -> f64 {
        let f0 = self.sys.rhs(t0, y0);
        let d0 = self.error_norm(y0, y0, y0, rtol, atol);
        let d1 = self.error_norm(y0, y0, &f0, rtol, atol);
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-4
        } else {
            0.01 * d0 / d1
        };
        h.min(h_max)
    }

    /// Integrates from `(t0, y0)` to `t_end` (which may lie before `t0`), calling `on_step`
    /// after every accepted step.
    pub fn run(
        &self,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        h_init: Option<f64>,
        mut on_step: impl FnMut(&Segment<N>) -> Flow,
    ) -> Result<RunEnd<N>> {
        self.cfg.validate()?;
        if !t_end.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidConfig("time span must be finite".into()));
        }
        if y0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState { t: t0 });
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let grid = self.cfg.sample_dt;
        let mut grid_index: u64 = 1;
        let grid_time = |i: u64| t0 + dir * (i as f64) * grid.unwrap_or(f64::INFINITY);

        let (fixed, rtol, atol, h_min, h_max) = match self.cfg.method {
            Method::FixedRk4 { h } => (true, 0.0, 0.0, h, h),
            Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                h_min,
                h_max,
            } => (false, rel_tol, abs_tol, h_min, h_max),
        };

        let mut t = t0;
        let mut y = y0;
        let mut h = if fixed {
            h_max
        } else {
            h_init
                .map(|h| h.abs().clamp(h_min, h_max))
                .unwrap_or_else(|| self.initial_step(t0, &y0, rtol, atol, h_max).max(h_min))
        };
        let mut last_h = h;
        if span == 0.0 {
            return Ok(RunEnd {
                t,
                y,
                stopped: false,
                last_h,
            });
        }

        loop {
            let remaining = (t_end - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            // clip to the end point and to the next grid point
            let mut target = None;
            let mut step = h;
            if step >= remaining * (1.0 - 1e-12) {
                step = remaining;
                target = Some(t_end);
            }
            if grid.is_some() {
                let mut tg = grid_time(grid_index);
                while (tg - t) * dir <= 0.0 {
                    grid_index += 1;
                    tg = grid_time(grid_index);
                }
                let to_grid = (tg - t) * dir;
                if to_grid <= step * (1.0 + 1e-12) && (tg - t_end) * dir <= 0.0 {
                    step = to_grid;
                    target = Some(tg);
                }
            }
            let clipped = target.is_some();

            let mut blew_up = false;
            let (t_new, y_new, accepted, factor) = if fixed {
                let y_new = self.rk4_step(t, &y, dir * step);
                (target.unwrap_or(t + dir * step), y_new, true, 1.0)
            } else {
                let (y_new, err) = self.dp_step(t, &y, dir * step);
                let en = self.error_norm(&y, &y_new, &err, rtol, atol);
                if !(en.is_finite() && y_new.iter().all(|x| x.is_finite())) {
                    blew_up = true;
                    (t, y, false, 0.2)
                } else {
                    let fac = if en == 0.0 {
                        5.0
                    } else {
                        (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    (target.unwrap_or(t + dir * step), y_new, en <= 1.0, fac)
                }
            };

            if !accepted {
                h = step * factor.min(1.0);
                if h < h_min {
                    return Err(if blew_up {
                        Error::NonFiniteState { t }
                    } else {
                        Error::StepSizeUnderflow { t, h }
                    });
                }
                continue;
            }
            if y_new.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteState { t: t_new });
            }

            let on_grid = match grid {
                Some(_) => target.is_some_and(|tg| tg == grid_time(grid_index) || tg == t_end),
                None => true,
            };
            let seg = Segment {
                t0: t,
                y0: y,
                t1: t_new,
                y1: y_new,
                on_grid,
            };
            if on_grid && grid.is_some() && target == Some(grid_time(grid_index)) {
                grid_index += 1;
            }
            t = t_new;
            y = y_new;
            if !fixed {
                // a clipped step says nothing about the achievable size
                let proposal = if clipped { h.max(step) } else { step * factor };
                h = proposal.min(h_max);
                last_h = if clipped { last_h } else { step };
            }
            if let Flow::Stop = on_step(&seg) {
                return Ok(RunEnd {
                    t,
                    y,
                    stopped: true,
                    last_h,
                });
            }
        }
        Ok(RunEnd {
            t,
            y,
            stopped: false,
            last_h,
        })
    }

    /// Bisection for a sign change of `g` inside an accepted step, evaluating states through
    /// [`Driver::step_to`]. Returns the refined time and state.
    pub fn refine_root(
        &self,
        seg: &Segment<N>,
        g: impl Fn(&[f64; N]) -> f64,
    ) -> (f64, [f64; N]) {
        let (mut a, mut b) = (seg.t0, seg.t1);
        let mut ga = g(&seg.y0);
        let mut best = (seg.t1, seg.y1, g(&seg.y1).abs());
        if ga.abs() < best.2 {
            best = (seg.t0, seg.y0, ga.abs());
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let ym = self.step_to(seg.t0, &seg.y0, m);
            let gm = g(&ym);
            if gm.abs() < best.2 {
                best = (m, ym, gm.abs());
            }
            if gm == 0.0 || best.2 <= 1e-13 {
                break;
            }
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        (best.0, best.1)
    }
}
