//! State, prolonged (state plus tangent) and fundamental-matrix flows of a planar system.

use crate::error::Result;
use crate::model::{winding_of, CylinderPoint, PlanarSystem, Tangent, Vec2};

use super::solver::{Driver, Flow, IntegratorConfig, OdeSystem, Segment};
use super::trajectory::{Fundamental, Trajectory};

pub struct StateOde<'a> {
    pub sys: &'a dyn PlanarSystem,
}

impl OdeSystem<2> for StateOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let f = self.sys.field(Vec2::new(y[0], y[1]), t);
        [f[0], f[1]]
    }

    fn angular(&self) -> [bool; 2] {
        [self.sys.state_space().first_is_angle(), false]
    }
}

/// `ẋ = f(x, t)`, `δ̇x = ∂f/∂x δx` (the input is held fixed, `δu = 0`).
pub struct ProlongedOde<'a> {
    pub sys: &'a dyn PlanarSystem,
}

impl OdeSystem<4> for ProlongedOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let x = Vec2::new(y[0], y[1]);
        let f = self.sys.field(x, t);
        let d = self.sys.jacobian(x, t) * Vec2::new(y[2], y[3]);
        [f[0], f[1], d[0], d[1]]
    }

    fn angular(&self) -> [bool; 4] {
        [self.sys.state_space().first_is_angle(), false, false, false]
    }
}

/// State together with the QR-factored fundamental matrix, see [`Fundamental`].
pub struct FundamentalOde<'a> {
    pub sys: &'a dyn PlanarSystem,
}

impl OdeSystem<6> for FundamentalOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 6]) -> [f64; 6] {
        let x = Vec2::new(y[0], y[1]);
        let f = self.sys.field(x, t);
        let j = self.sys.jacobian(x, t);
        let (s, c) = y[2].sin_cos();
        // B = Qᵀ J Q
        let (j11, j12, j21, j22) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
        let jq11 = j11 * c + j12 * s;
        let jq12 = -j11 * s + j12 * c;
        let jq21 = j21 * c + j22 * s;
        let jq22 = -j21 * s + j22 * c;
        let b11 = c * jq11 + s * jq21;
        let b12 = c * jq12 + s * jq22;
        let b21 = -s * jq11 + c * jq21;
        let b22 = -s * jq12 + c * jq22;
        let shear_rate = (b12 + b21) * (y[4] - y[3]).exp();
        [f[0], f[1], b21, b11, b22, shear_rate]
    }

    fn angular(&self) -> [bool; 6] {
        [
            self.sys.state_space().first_is_angle(),
            false,
            true,
            false,
            false,
            false,
        ]
    }
}

pub(crate) fn fundamental_state(x: Vec2, f: Fundamental) -> [f64; 6] {
    let a = f.to_array();
    [x[0], x[1], a[0], a[1], a[2], a[3]]
}

pub(crate) fn split_fundamental(y: &[f64; 6]) -> (Vec2, Fundamental) {
    (Vec2::new(y[0], y[1]), Fundamental::from_slice(&y[2..]))
}

fn point_and_winding(x0: f64, x1: f64) -> (CylinderPoint, i64) {
    (CylinderPoint::new(x0, x1), winding_of(x0))
}

fn record<const N: usize, O: OdeSystem<N>>(
    ode: &O,
    sys: &dyn PlanarSystem,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
    mut extra: impl FnMut(&[f64; N], &mut Trajectory),
) -> Result<Trajectory> {
    let mut tr = Trajectory::empty(sys.state_space());
    let mut push = |t: f64, y: &[f64; N], tr: &mut Trajectory| {
        let (p, w) = point_and_winding(y[0], y[1]);
        tr.times.push(t);
        tr.states.push(p);
        tr.winding.push(w);
        extra(y, tr);
    };
    push(t_span.0, &y0, &mut tr);
    let mut last_t = t_span.0;
    Driver::new(ode, cfg).run(t_span.0, y0, t_span.1, None, |seg: &Segment<N>| {
        if seg.on_grid || cfg.sample_dt.is_none() {
            push(seg.t1, &seg.y1, &mut tr);
            last_t = seg.t1;
        }
        Flow::Continue
    })?;
    debug_assert_eq!(last_t, t_span.1);
    Ok(tr)
}

/// Solution from `x0` over `t_span`; the span may run backwards.
pub fn integrate_state(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
) -> Result<Trajectory> {
    integrate_state_raw(sys, x0.to_vec(), cfg, t_span)
}

/// As [`integrate_state`] from unwrapped coordinates; needed for systems on the plane.
pub fn integrate_state_raw(
    sys: &dyn PlanarSystem,
    x0: Vec2,
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
) -> Result<Trajectory> {
    let ode = StateOde { sys };
    record(&ode, sys, [x0[0], x0[1]], cfg, t_span, |_, _| {})
}

/// Solution together with the linearized transport of `d0` along it.
pub fn integrate_prolonged(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    d0: Tangent,
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
) -> Result<Trajectory> {
    let ode = ProlongedOde { sys };
    let y0 = [x0.theta(), x0.v(), d0.dtheta, d0.dv];
    let mut tangents = Vec::new();
    let mut tr = record(&ode, sys, y0, cfg, t_span, |y, _| {
        tangents.push(Tangent::new(y[2], y[3]))
    })?;
    tr.tangents = Some(tangents);
    Ok(tr)
}

/// Solution together with its fundamental matrix `Φ(t, t₀)`, `Φ(t₀) = I`.
pub fn integrate_fundamental(
    sys: &dyn PlanarSystem,
    x0: CylinderPoint,
    cfg: &IntegratorConfig,
    t_span: (f64, f64),
) -> Result<Trajectory> {
    let ode = FundamentalOde { sys };
    let y0 = fundamental_state(x0.to_vec(), Fundamental::identity());
    let mut mats = Vec::new();
    let mut tr = record(&ode, sys, y0, cfg, t_span, |y, _| {
        mats.push(split_fundamental(y).1)
    })?;
    tr.fundamental = Some(mats);
    Ok(tr)
}

fn unsampled(cfg: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        sample_dt: None,
        ..cfg.clone()
    }
}

/// End point of the flow from `(t0, x0)` to `t1`, angles kept lifted.
pub fn flow_state(
    sys: &dyn PlanarSystem,
    x0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec2> {
    let cfg = unsampled(cfg);
    let end = Driver::new(&StateOde { sys }, &cfg).run(t0, [x0[0], x0[1]], t1, None, |_| {
        Flow::Continue
    })?;
    Ok(Vec2::new(end.y[0], end.y[1]))
}

/// End point and transported tangent.
pub fn flow_prolonged(
    sys: &dyn PlanarSystem,
    x0: Vec2,
    d0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec2, Vec2)> {
    let cfg = unsampled(cfg);
    let end = Driver::new(&ProlongedOde { sys }, &cfg).run(
        t0,
        [x0[0], x0[1], d0[0], d0[1]],
        t1,
        None,
        |_| Flow::Continue,
    )?;
    Ok((
        Vec2::new(end.y[0], end.y[1]),
        Vec2::new(end.y[2], end.y[3]),
    ))
}

/// End point and fundamental matrix of the flow from `t0` to `t1`.
pub fn flow_fundamental(
    sys: &dyn PlanarSystem,
    x0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec2, Fundamental)> {
    let cfg = unsampled(cfg);
    let y0 = fundamental_state(x0, Fundamental::identity());
    let end = Driver::new(&FundamentalOde { sys }, &cfg).run(t0, y0, t1, None, |_| Flow::Continue)?;
    Ok(split_fundamental(&end.y))
}
