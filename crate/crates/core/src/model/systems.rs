use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::input::InputLaw;
use super::point::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Which coordinates of a planar state are angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpace {
    /// `𝕊 × ℝ`: angle and velocity.
    Cylinder,
    /// `𝕊`: one angle, the second coordinate is held at zero.
    Circle,
    /// `ℝ²`.
    Plane,
}

impl StateSpace {
    pub fn dimension(&self) -> usize {
        match self {
            StateSpace::Circle => 1,
            StateSpace::Cylinder | StateSpace::Plane => 2,
        }
    }

    pub fn first_is_angle(&self) -> bool {
        !matches!(self, StateSpace::Plane)
    }
}

/// A time-varying vector field on a planar state space with its exact Jacobian.
///
/// States are passed in raw coordinates; for angular coordinates the lift to `ℝ` is allowed and
/// implementations must be `2π`-periodic in it.
pub trait PlanarSystem: Send + Sync {
    fn state_space(&self) -> StateSpace;

    fn field(&self, x: Vec2, t: f64) -> Vec2;

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2;

    /// `∂f/∂u` for systems with a scalar torque input.
    fn input_partial(&self, _x: Vec2, _t: f64) -> Option<Vec2> {
        None
    }

    /// `∂f/∂t` at fixed state.
    fn time_partial(&self, x: Vec2, t: f64) -> Vec2 {
        let h = 1e-6;
        (self.field(x, t + h) - self.field(x, t - h)) / (2.0 * h)
    }

    fn dimension(&self) -> usize {
        self.state_space().dimension()
    }

    fn as_pendulum(&self) -> Option<&Pendulum> {
        None
    }

    fn as_overdamped(&self) -> Option<&OverdampedPendulum> {
        None
    }
}

/// Damping and torque law of the full pendulum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub k: f64,
    pub input: InputLaw,
}

impl PendulumParams {
    pub fn new(k: f64, input: InputLaw) -> Result<Self> {
        let p = Self { k, input };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(k: f64, u: f64) -> Result<Self> {
        Self::new(k, InputLaw::constant(u))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "damping k must be finite and >= 0, got {}",
                self.k
            )));
        }
        self.input.validate()
    }
}

/// `θ̇ = v`, `v̇ = -sin θ - k v + u(θ, v, t)` on the cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct Pendulum {
    params: PendulumParams,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        params.validate()?;
        if params.input.contains_half_angle_gain() {
            return Err(Error::InvalidConfig(
                "half-angle gain is defined for the overdamped pendulum only".into(),
            ));
        }
        Ok(Self { params })
    }

    pub fn constant(k: f64, u: f64) -> Result<Self> {
        Self::new(PendulumParams::constant(k, u)?)
    }

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn input(&self) -> &InputLaw {
        &self.params.input
    }
}

impl PlanarSystem for Pendulum {
    fn state_space(&self) -> StateSpace {
        StateSpace::Cylinder
    }

    fn field(&self, x: Vec2, t: f64) -> Vec2 {
        let (theta, v) = (x[0], x[1]);
        let u = self.params.input.eval(theta, v, t);
        Vec2::new(v, -theta.sin() - self.params.k * v + u)
    }

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2 {
        let (theta, v) = (x[0], x[1]);
        let (ut, uv) = self.params.input.partials(theta, v, t);
        Mat2::new(0.0, 1.0, -theta.cos() + ut, -self.params.k + uv)
    }

    fn input_partial(&self, _x: Vec2, _t: f64) -> Option<Vec2> {
        Some(Vec2::new(0.0, 1.0))
    }

    fn time_partial(&self, x: Vec2, t: f64) -> Vec2 {
        Vec2::new(0.0, self.params.input.time_derivative(x[0], x[1], t))
    }

    fn as_pendulum(&self) -> Option<&Pendulum> {
        Some(self)
    }
}

/// `θ̇ = -sin θ + u(θ, t)` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct OverdampedPendulum {
    input: InputLaw,
}

impl OverdampedPendulum {
    pub fn new(input: InputLaw) -> Result<Self> {
        input.validate()?;
        Ok(Self { input })
    }

    pub fn input(&self) -> &InputLaw {
        &self.input
    }
}

impl PlanarSystem for OverdampedPendulum {
    fn state_space(&self) -> StateSpace {
        StateSpace::Circle
    }

    fn field(&self, x: Vec2, t: f64) -> Vec2 {
        Vec2::new(-x[0].sin() + self.input.eval(x[0], 0.0, t), 0.0)
    }

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2 {
        let (ut, _) = self.input.partials(x[0], 0.0, t);
        Mat2::new(-x[0].cos() + ut, 0.0, 0.0, 0.0)
    }

    fn input_partial(&self, _x: Vec2, _t: f64) -> Option<Vec2> {
        Some(Vec2::new(1.0, 0.0))
    }

    fn time_partial(&self, x: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.input.time_derivative(x[0], 0.0, t), 0.0)
    }

    fn as_overdamped(&self) -> Option<&OverdampedPendulum> {
        Some(self)
    }
}

type FieldFn = dyn Fn(Vec2, f64) -> Vec2 + Send + Sync;
type JacobianFn = dyn Fn(Vec2, f64) -> Mat2 + Send + Sync;

/// User-supplied planar system built from closures.
#[derive(Clone)]
pub struct CustomSystem {
    space: StateSpace,
    field: Arc<FieldFn>,
    jacobian: Arc<JacobianFn>,
}

impl CustomSystem {
    pub fn new(
        space: StateSpace,
        field: impl Fn(Vec2, f64) -> Vec2 + Send + Sync + 'static,
        jacobian: impl Fn(Vec2, f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            space,
            field: Arc::new(field),
            jacobian: Arc::new(jacobian),
        }
    }
}

impl fmt::Debug for CustomSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSystem")
            .field("space", &self.space)
            .finish_non_exhaustive()
    }
}

impl PlanarSystem for CustomSystem {
    fn state_space(&self) -> StateSpace {
        self.space
    }

    fn field(&self, x: Vec2, t: f64) -> Vec2 {
        (self.field)(x, t)
    }

    fn jacobian(&self, x: Vec2, t: f64) -> Mat2 {
        (self.jacobian)(x, t)
    }
}

/// Forward-difference Jacobian, column by column.
pub fn finite_difference_jacobian(sys: &dyn PlanarSystem, x: Vec2, t: f64, eps: f64) -> Mat2 {
    let f0 = sys.field(x, t);
    let mut jac = Mat2::zeros();
    for i in 0..sys.dimension() {
        let mut xe = x;
        xe[i] += eps;
        jac.set_column(i, &((sys.field(xe, t) - f0) / eps));
    }
    jac
}
