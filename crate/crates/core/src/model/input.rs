use serde::{Deserialize, Serialize};

use super::point::wrap_angle;
use crate::error::{Error, Result};

/// Torque laws `u(θ, v, t)` driving the pendulum family.
///
/// `FeedbackLinearizing` and `HalfAngleGain` are state feedbacks wrapped around an inner law,
/// so their partial derivatives in `θ` enter the closed-loop Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputLaw {
    Constant {
        u0: f64,
    },
    Sinusoidal {
        bias: f64,
        amplitude: f64,
        omega: f64,
    },
    /// `u = sin θ + w`
    FeedbackLinearizing { w: Box<InputLaw> },
    /// `u = cos(θ/2) r`, meaningful on the overdamped pendulum with `|θ| < π`.
    HalfAngleGain { r: Box<InputLaw> },
    /// Time-sampled signal, linearly interpolated and held constant outside the samples.
    External { times: Vec<f64>, values: Vec<f64> },
}

impl Default for InputLaw {
    fn default() -> Self {
        InputLaw::Constant { u0: 0.0 }
    }
}

impl InputLaw {
    pub fn constant(u0: f64) -> Self {
        InputLaw::Constant { u0 }
    }

    pub fn sinusoidal(bias: f64, amplitude: f64, omega: f64) -> Self {
        InputLaw::Sinusoidal {
            bias,
            amplitude,
            omega,
        }
    }

    pub fn feedback_linearizing(w: InputLaw) -> Self {
        InputLaw::FeedbackLinearizing { w: Box::new(w) }
    }

    pub fn half_angle_gain(r: InputLaw) -> Self {
        InputLaw::HalfAngleGain { r: Box::new(r) }
    }

    pub fn external(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let law = InputLaw::External { times, values };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputLaw::Constant { u0 } => finite("u0", *u0),
            InputLaw::Sinusoidal {
                bias,
                amplitude,
                omega,
            } => {
                finite("bias", *bias)?;
                finite("amplitude", *amplitude)?;
                finite("omega", *omega)
            }
            InputLaw::FeedbackLinearizing { w } => w.validate(),
            InputLaw::HalfAngleGain { r } => r.validate(),
            InputLaw::External { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidConfig(
                        "external signal needs equally many (non-zero) times and values".into(),
                    ));
                }
                if times.iter().chain(values).any(|x| !x.is_finite()) {
                    return Err(Error::InvalidConfig("external signal is not finite".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidConfig(
                        "external signal times must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Torque at state `(θ, v)` and time `t`.
    #[allow(clippy::only_used_in_recursion)]
    pub fn eval(&self, theta: f64, v: f64, t: f64) -> f64 {
        match self {
            InputLaw::Constant { u0 } => *u0,
            InputLaw::Sinusoidal {
                bias,
                amplitude,
                omega,
            } => bias + amplitude * (omega * t).sin(),
            InputLaw::FeedbackLinearizing { w } => theta.sin() + w.eval(theta, v, t),
            InputLaw::HalfAngleGain { r } => {
                (0.5 * wrap_angle(theta)).cos() * r.eval(theta, v, t)
            }
            InputLaw::External { times, values } => {
                let (i, s) = locate(times, t);
                match s {
                    None => values[i],
                    Some(s) => values[i] + s * (values[i + 1] - values[i]),
                }
            }
        }
    }

    /// `(∂u/∂θ, ∂u/∂v)`.
    pub fn partials(&self, theta: f64, v: f64, t: f64) -> (f64, f64) {
        match self {
            InputLaw::Constant { .. }
            | InputLaw::Sinusoidal { .. }
            | InputLaw::External { .. } => (0.0, 0.0),
            InputLaw::FeedbackLinearizing { w } => {
                let (wt, wv) = w.partials(theta, v, t);
                (theta.cos() + wt, wv)
            }
            InputLaw::HalfAngleGain { r } => {
                let half = 0.5 * wrap_angle(theta);
                let (rt, rv) = r.partials(theta, v, t);
                let rr = r.eval(theta, v, t);
                (-0.5 * half.sin() * rr + half.cos() * rt, half.cos() * rv)
            }
        }
    }

    /// `∂u/∂t` at fixed state.
    #[allow(clippy::only_used_in_recursion)]
    pub fn time_derivative(&self, theta: f64, v: f64, t: f64) -> f64 {
        match self {
            InputLaw::Constant { .. } => 0.0,
            InputLaw::Sinusoidal {
                amplitude, omega, ..
            } => amplitude * omega * (omega * t).cos(),
            InputLaw::FeedbackLinearizing { w } => w.time_derivative(theta, v, t),
            InputLaw::HalfAngleGain { r } => {
                (0.5 * wrap_angle(theta)).cos() * r.time_derivative(theta, v, t)
            }
            InputLaw::External { times, values } => {
                let (i, s) = locate(times, t);
                match s {
                    None => 0.0,
                    Some(_) => (values[i + 1] - values[i]) / (times[i + 1] - times[i]),
                }
            }
        }
    }

    /// The torque value when the law is a plain constant.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            InputLaw::Constant { u0 } => Some(*u0),
            _ => None,
        }
    }

    pub fn contains_half_angle_gain(&self) -> bool {
        match self {
            InputLaw::HalfAngleGain { .. } => true,
            InputLaw::FeedbackLinearizing { w } => w.contains_half_angle_gain(),
            _ => false,
        }
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite")))
    }
}

/// Segment index and interpolation fraction; `None` fraction means clamped to an end sample.
fn locate(times: &[f64], t: f64) -> (usize, Option<f64>) {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return (0, None);
    }
    if t >= times[n - 1] {
        return (n - 1, None);
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    (i, Some((t - times[i]) / (times[i + 1] - times[i])))
}
