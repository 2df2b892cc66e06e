use std::fmt::Write as _;
use std::f64::consts::PI;

use nalgebra::Rotation2;
use serde::Serialize;

use crate::model::{CylinderPoint, Mat2, StateSpace, Tangent};

/// Fundamental matrix `Φ(t)` held as `Q(φ)·R` with `R = [[e^{s₁}, m e^{s₁}], [0, e^{s₂}]]`.
///
/// The logarithmic diagonal keeps `det Φ = e^{s₁+s₂}` exact long after the raw entries have
/// lost every significant digit of it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fundamental {
    pub angle: f64,
    pub log_r11: f64,
    pub log_r22: f64,
    pub shear: f64,
}

impl Fundamental {
    pub fn identity() -> Self {
        Self {
            angle: 0.0,
            log_r11: 0.0,
            log_r22: 0.0,
            shear: 0.0,
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let q = *Rotation2::new(self.angle).matrix();
        let a = self.log_r11.exp();
        let r = Mat2::new(a, self.shear * a, 0.0, self.log_r22.exp());
        q * r
    }

    pub fn log_det(&self) -> f64 {
        self.log_r11 + self.log_r22
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    pub fn trace(&self) -> f64 {
        self.matrix().trace()
    }

    pub fn apply(&self, d: Tangent) -> Tangent {
        Tangent::from_vec(self.matrix() * d.to_vec())
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.angle, self.log_r11, self.log_r22, self.shear]
    }

    pub(crate) fn from_slice(s: &[f64]) -> Self {
        Self {
            angle: s[0],
            log_r11: s[1],
            log_r22: s[2],
            shear: s[3],
        }
    }
}

/// Samples of a solution. Angles are stored wrapped, with `winding` recording the number of
/// full turns made since the start.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub space: StateSpace,
    pub times: Vec<f64>,
    pub states: Vec<CylinderPoint>,
    pub winding: Vec<i64>,
    pub tangents: Option<Vec<Tangent>>,
    pub fundamental: Option<Vec<Fundamental>>,
}

impl Trajectory {
    pub(crate) fn empty(space: StateSpace) -> Self {
        Self {
            space,
            times: Vec::new(),
            states: Vec::new(),
            winding: Vec::new(),
            tangents: None,
            fundamental: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> CylinderPoint {
        self.states[0]
    }

    pub fn last(&self) -> CylinderPoint {
        *self.states.last().expect("trajectory has samples")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    /// Lifted angle of sample `i`.
    pub fn unwrapped_theta(&self, i: usize) -> f64 {
        self.states[i].theta() + 2.0 * PI * self.winding[i] as f64
    }

    /// CSV with header; floating-point columns carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,theta,v,winding");
        if self.tangents.is_some() {
            out.push_str(",dtheta,dv");
        }
        if self.fundamental.is_some() {
            out.push_str(",phi11,phi12,phi21,phi22");
        }
        out.push('\n');
        for i in 0..self.len() {
            let s = self.states[i];
            let _ = write!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                self.times[i],
                s.theta(),
                s.v(),
                self.winding[i]
            );
            if let Some(ts) = &self.tangents {
                let _ = write!(out, ",{:.16e},{:.16e}", ts[i].dtheta, ts[i].dv);
            }
            if let Some(fs) = &self.fundamental {
                let m = fs[i].matrix();
                let _ = write!(
                    out,
                    ",{:.16e},{:.16e},{:.16e},{:.16e}",
                    m[(0, 0)],
                    m[(0, 1)],
                    m[(1, 0)],
                    m[(1, 1)]
                );
            }
            out.push('\n');
        }
        out
    }
}
