use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{passivating_output, FinslerLyapunov};
use crate::integrate::{integrate_prolonged, integrate_state_raw, IntegratorConfig, Trajectory};
use super::pairs::{pair_from_trajectories, PairConvergence};
use crate::model::{
    wrap_angle, CylinderPoint, InputLaw, Mat2, PlanarSystem, StateSpace, Tangent, Vec2,
};

/// Strictly increasing output feedback `h(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFeedback {
    /// `h(y) = y`
    Linear,
    /// `h(y) = y³ + y`
    CubicPlusLinear,
}

impl OutputFeedback {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            OutputFeedback::Linear => y,
            OutputFeedback::CubicPlusLinear => y * y * y + y,
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            OutputFeedback::Linear => 1.0,
            OutputFeedback::CubicPlusLinear => 3.0 * y * y + 1.0,
        }
    }
}

fn half_sec(theta: f64) -> f64 {
    1.0 / (0.5 * wrap_angle(theta)).cos()
}

fn output(theta: f64) -> f64 {
    2.0 * (0.5 * wrap_angle(theta)).tan().asinh()
}

/// Overdamped pendulum with half-angle gain closed by `r = -h(y) + q(t)`, `y = ∫₀^θ sec(s/2) ds`:
/// `θ̇ = -sin θ + cos(θ/2) (q - h(y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct PassiveFeedbackLoop {
    pub h: OutputFeedback,
    pub q: InputLaw,
}

impl PassiveFeedbackLoop {
    pub fn new(h: OutputFeedback, q: InputLaw) -> Result<Self> {
        q.validate()?;
        Ok(Self { h, q })
    }
}

impl PlanarSystem for PassiveFeedbackLoop {
    fn state_space(&self) -> StateSpace {
        StateSpace::Circle
    }

    fn field(&self, x: Vec2, t: f64) -> Vec2 {
        let th = x[0];
        let r = self.q.eval(th, 0.0, t) - self.h.eval(output(th));
        Vec2::new(-th.sin() + (0.5 * wrap_angle(th)).cos() * r, 0.0)
    }

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2 {
        let th = x[0];
        let half = 0.5 * wrap_angle(th);
        let r = self.q.eval(th, 0.0, t) - self.h.eval(output(th));
        let (q_theta, _) = self.q.partials(th, 0.0, t);
        // d/dθ[cos(θ/2) h(y)] = -½ sin(θ/2) h + h'(y), since dy/dθ = sec(θ/2)
        let d = -th.cos() - 0.5 * half.sin() * r + half.cos() * q_theta
            - self.h.derivative(output(th));
        Mat2::new(d, 0.0, 0.0, 0.0)
    }

    fn time_partial(&self, x: Vec2, t: f64) -> Vec2 {
        let th = x[0];
        Vec2::new((0.5 * wrap_angle(th)).cos() * self.q.time_derivative(th, 0.0, t), 0.0)
    }
}

/// Two overdamped pendulums with half-angle gains wired as `r₁ = -y₂ + q₁`, `r₂ = y₁ + q₂`.
/// The state `(θ₁, θ₂)` lives in the plane `(-π, π)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PassiveInterconnection {
    pub q1: InputLaw,
    pub q2: InputLaw,
}

impl PassiveInterconnection {
    pub fn new(q1: InputLaw, q2: InputLaw) -> Result<Self> {
        q1.validate()?;
        q2.validate()?;
        Ok(Self { q1, q2 })
    }

    /// `(r₁, r₂)` at state `x`.
    pub fn inputs(&self, x: Vec2, t: f64) -> (f64, f64) {
        (
            -output(x[1]) + self.q1.eval(x[0], 0.0, t),
            output(x[0]) + self.q2.eval(x[1], 0.0, t),
        )
    }
}

impl PlanarSystem for PassiveInterconnection {
    fn state_space(&self) -> StateSpace {
        StateSpace::Plane
    }

    fn field(&self, x: Vec2, t: f64) -> Vec2 {
        let (r1, r2) = self.inputs(x, t);
        Vec2::new(
            -x[0].sin() + (0.5 * x[0]).cos() * r1,
            -x[1].sin() + (0.5 * x[1]).cos() * r2,
        )
    }

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2 {
        let (r1, r2) = self.inputs(x, t);
        let (h1, h2) = (0.5 * x[0], 0.5 * x[1]);
        Mat2::new(
            -x[0].cos() - 0.5 * h1.sin() * r1,
            -h1.cos() / h2.cos(),
            h2.cos() / h1.cos(),
            -x[1].cos() - 0.5 * h2.sin() * r2,
        )
    }

    fn time_partial(&self, x: Vec2, t: f64) -> Vec2 {
        Vec2::new(
            (0.5 * x[0]).cos() * self.q1.time_derivative(x[0], 0.0, t),
            (0.5 * x[1]).cos() * self.q2.time_derivative(x[1], 0.0, t),
        )
    }
}

fn check_open_square(theta: [f64; 2]) -> Result<()> {
    for th in theta {
        passivating_output(th)?;
    }
    Ok(())
}

/// Simulates the interconnection from angles `x0` and returns one circle trajectory per pendulum,
/// sampled every `cfg.sample_dt` (default 1/1000 of the horizon).
pub fn interconnect_passive(
    q1: &InputLaw,
    q2: &InputLaw,
    x0: (f64, f64),
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<(Trajectory, Trajectory)> {
    check_open_square([x0.0, x0.1])?;
    let sys = PassiveInterconnection::new(q1.clone(), q2.clone())?;
    let cfg = IntegratorConfig {
        sample_dt: Some(cfg.sample_dt.unwrap_or(horizon / 1000.0)),
        ..cfg.clone()
    };
    let joint = integrate_state_raw(&sys, Vec2::new(x0.0, x0.1), &cfg, (0.0, horizon))?;
    let mut a = Trajectory::empty(StateSpace::Circle);
    let mut b = Trajectory::empty(StateSpace::Circle);
    for ((t, p), w) in joint.times.iter().zip(&joint.states).zip(&joint.winding) {
        // planar samples hold (θ₁, θ₂); θ₁ has been wrapped, so a non-zero winding means it left
        let (th1, th2) = (p.theta(), p.v());
        if *w != 0 || th1 == -std::f64::consts::PI || !(th2.abs() < std::f64::consts::PI) {
            return Err(Error::Domain(format!("an angle reached ±π at t = {t}")));
        }
        for (tr, th) in [(&mut a, th1), (&mut b, th2)] {
            tr.times.push(*t);
            tr.states.push(CylinderPoint::new(th, 0.0));
            tr.winding.push(0);
        }
    }
    Ok((a, b))
}

/// Runs the interconnection from two initial conditions and measures, in the weighted metric,
/// how far apart pendulum 1 ends up in the two runs.
pub fn interconnect_pair_convergence(
    q1: &InputLaw,
    q2: &InputLaw,
    x0: (f64, f64),
    z0: (f64, f64),
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<PairConvergence> {
    let (a, _) = interconnect_passive(q1, q2, x0, cfg, horizon)?;
    let (b, _) = interconnect_passive(q1, q2, z0, cfg, horizon)?;
    pair_from_trajectories(&FinslerLyapunov::WeightedAngle, &a, &b)
}

/// Differential storage inequality `V̇₁ ≤ δr₁ δy₁` for pendulum 1 of the interconnection, with
/// `V₁ = δθ₁²/(1 + cos θ₁)`, evaluated along a prolonged solution.
#[derive(Clone, Debug, Serialize)]
pub struct StorageCheck {
    pub samples: usize,
    /// `max (V̇₁ - δr₁ δy₁)`; non-positive when the inequality holds.
    pub max_excess: f64,
    /// `max |V̇₁ - δr₁ δy₁ + δθ₁²|`, the gap to the exact dissipation identity.
    pub max_identity_error: f64,
}

pub fn storage_inequality_check(
    sys: &PassiveInterconnection,
    x0: (f64, f64),
    d0: Tangent,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<StorageCheck> {
    check_open_square([x0.0, x0.1])?;
    let cfg = IntegratorConfig {
        sample_dt: Some(cfg.sample_dt.unwrap_or(horizon / 1000.0)),
        ..cfg.clone()
    };
    let tr = integrate_prolonged(sys, CylinderPoint::new(x0.0, x0.1), d0, &cfg, (0.0, horizon))?;
    let tangents = tr.tangents.as_ref().expect("prolonged trajectory carries tangents");
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_identity_error: f64 = 0.0;
    for ((t, p), d) in tr.times.iter().zip(&tr.states).zip(tangents) {
        let x = Vec2::new(p.theta(), p.v());
        check_open_square([x[0], x[1]])?;
        let f = sys.field(x, *t);
        let dd = sys.jacobian(x, *t) * d.to_vec();
        let c = 1.0 + x[0].cos();
        let vdot = 2.0 * d.dtheta * dd[0] / c + d.dtheta * d.dtheta * x[0].sin() * f[0] / (c * c);
        let dr1 = -half_sec(x[1]) * d.dv;
        let dy1 = half_sec(x[0]) * d.dtheta;
        let excess = vdot - dr1 * dy1;
        max_excess = max_excess.max(excess);
        max_identity_error = max_identity_error.max((excess + d.dtheta * d.dtheta).abs());
    }
    Ok(StorageCheck {
        samples: tr.len(),
        max_excess,
        max_identity_error,
    })
}
