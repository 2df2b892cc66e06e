use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

const TAU: f64 = 2.0 * PI;

/// Canonical representative of an angle in `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta - TAU * ((theta + PI) / TAU).floor();
    // floor can leave w == π (or a hair above -π) through rounding
    if w >= PI {
        w - TAU
    } else if w < -PI {
        w + TAU
    } else {
        w
    }
}

/// Signed angular difference `a - b` folded into `(-π, π]`.
pub fn wrapped_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d == -PI {
        PI
    } else {
        d
    }
}

/// Number of full turns separating an unwrapped angle from its canonical representative.
pub fn winding_of(unwrapped: f64) -> i64 {
    ((unwrapped - wrap_angle(unwrapped)) / TAU).round() as i64
}

#[derive(Deserialize)]
struct RawPoint {
    theta: f64,
    v: f64,
}

impl From<RawPoint> for CylinderPoint {
    fn from(raw: RawPoint) -> Self {
        CylinderPoint::new(raw.theta, raw.v)
    }
}

/// A state `(θ, v)` on the cylinder `𝕊 × ℝ`. The angle is always stored in `[-π, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPoint")]
pub struct CylinderPoint {
    theta: f64,
    v: f64,
}

impl CylinderPoint {
    pub fn new(theta: f64, v: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            v,
        }
    }

    pub fn origin() -> Self {
        Self { theta: 0.0, v: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.v.is_finite()
    }

    pub fn to_vec(&self) -> Vec2 {
        Vec2::new(self.theta, self.v)
    }

    pub fn from_vec(x: Vec2) -> Self {
        Self::new(x[0], x[1])
    }

    /// Distance on the cylinder using the wrapped angular difference.
    pub fn distance(&self, other: &CylinderPoint) -> f64 {
        wrapped_difference(self.theta, other.theta).hypot(self.v - other.v)
    }
}

/// A tangent vector `(δθ, δv)` attached to some state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tangent {
    pub dtheta: f64,
    pub dv: f64,
}

impl Tangent {
    pub fn new(dtheta: f64, dv: f64) -> Self {
        Self { dtheta, dv }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn norm(&self) -> f64 {
        self.dtheta.hypot(self.dv)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.dtheta * s, self.dv * s)
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn to_vec(&self) -> Vec2 {
        Vec2::new(self.dtheta, self.dv)
    }

    pub fn from_vec(d: Vec2) -> Self {
        Self::new(d[0], d[1])
    }
}
