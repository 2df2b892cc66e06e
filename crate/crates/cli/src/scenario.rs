use std::f64::consts::PI;

use diffgeo_core::atlas::AtlasGrid;
use diffgeo_core::contraction::OutputFeedback;
use diffgeo_core::geometry::{ConeFieldSpec, FinslerLyapunov, Projection};
use diffgeo_core::integrate::IntegratorConfig;
use diffgeo_core::model::{InputLaw, Mat2, OverdampedPendulum, Pendulum, PendulumParams, Vec2};
use diffgeo_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Pendulum,
    Overdamped,
}

/// A scenario document. `options` is interpreted by the subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default)]
    pub input: InputLaw,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "empty_object")]
    pub options: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        if !s.options.is_object() {
            return Err(invalid("options must be a JSON object"));
        }
        s.integrator.validate()?;
        s.input.validate()?;
        Ok(s)
    }

    pub fn options<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.options.clone()).map_err(|e| invalid(format!("options: {e}")))
    }

    /// The same scenario with `options` replaced by their fully defaulted form.
    pub fn resolved<T: Serialize>(&self, opts: &T) -> Self {
        Self {
            options: serde_json::to_value(opts).expect("options serialize"),
            ..self.clone()
        }
    }

    pub fn params(&self) -> Result<PendulumParams> {
        if self.system != SystemKind::Pendulum {
            return Err(invalid("this subcommand needs system = \"pendulum\""));
        }
        let k = self.k.ok_or_else(|| invalid("pendulum scenarios need k"))?;
        PendulumParams::new(k, self.input.clone())
    }

    pub fn constant_torque(&self) -> Result<(f64, f64)> {
        let p = self.params()?;
        let u = p
            .input
            .constant_value()
            .ok_or_else(|| invalid("this subcommand needs a constant input"))?;
        Ok((p.k, u))
    }

    pub fn pendulum(&self) -> Result<Pendulum> {
        Pendulum::new(self.params()?)
    }

    pub fn overdamped(&self) -> Result<OverdampedPendulum> {
        if self.system != SystemKind::Overdamped {
            return Err(invalid("this subcommand needs system = \"overdamped\""));
        }
        OverdampedPendulum::new(self.input.clone())
    }
}

/// `"squared-angle"`, `"weighted-angle"` or `{"P": [[a, b], [c, d]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(NamedMetric),
    Quadratic {
        #[serde(rename = "P")]
        p: [[f64; 2]; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedMetric {
    SquaredAngle,
    WeightedAngle,
}

impl MetricSpec {
    pub fn build(&self) -> Result<FinslerLyapunov> {
        match self {
            MetricSpec::Named(NamedMetric::SquaredAngle) => Ok(FinslerLyapunov::SquaredAngle),
            MetricSpec::Named(NamedMetric::WeightedAngle) => Ok(FinslerLyapunov::WeightedAngle),
            MetricSpec::Quadratic { p } => {
                FinslerLyapunov::constant_quadratic(Mat2::new(p[0][0], p[0][1], p[1][0], p[1][1]))
            }
        }
    }
}

/// `"pendulum-default"` or `{"functionals": [[a₁θ, a₁v], [a₂θ, a₂v]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConeSpec {
    Named(NamedCone),
    Functionals { functionals: [[f64; 2]; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedCone {
    PendulumDefault,
}

impl ConeSpec {
    pub fn build(&self) -> Result<ConeFieldSpec> {
        match self {
            ConeSpec::Named(NamedCone::PendulumDefault) => Ok(ConeFieldSpec::pendulum_default()),
            ConeSpec::Functionals { functionals: a } => {
                ConeFieldSpec::constant(Vec2::new(a[0][0], a[0][1]), Vec2::new(a[1][0], a[1][1]))
            }
        }
    }
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec::Named(NamedCone::PendulumDefault)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoOptions {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    pub x0: [f64; 2],
    pub horizon: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            x0: [1.0, 0.0],
            horizon: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProlongedOptions {
    pub x0: [f64; 2],
    pub d0: [f64; 2],
    pub horizon: f64,
}

impl Default for ProlongedOptions {
    fn default() -> Self {
        Self {
            x0: [1.0, 0.0],
            d0: [1.0, 0.0],
            horizon: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleOptionsSpec {
    pub section_theta: f64,
    /// Defaults to `u/k` (at least 0.5 in magnitude).
    pub guess_v: Option<f64>,
    pub samples: usize,
}

impl Default for CycleOptionsSpec {
    fn default() -> Self {
        Self {
            section_theta: 0.0,
            guess_v: None,
            samples: 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovOptions {
    pub x0: [f64; 2],
    pub d0: [f64; 2],
    pub horizon: f64,
    pub renorm_interval: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            x0: [0.5, 0.0],
            d0: [1.0, 0.0],
            horizon: 200.0,
            renorm_interval: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayOptions {
    pub metric: MetricSpec,
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    pub v_values: Vec<f64>,
    pub n_directions: usize,
    pub projection: Option<Projection>,
    pub t: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            metric: MetricSpec::Named(NamedMetric::WeightedAngle),
            theta_min: -PI + 0.01,
            theta_max: PI - 0.01,
            n_theta: 720,
            v_values: vec![0.0],
            n_directions: 64,
            projection: None,
            t: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairOptions {
    pub x0: [f64; 2],
    pub z0: [f64; 2],
    pub metric: MetricSpec,
    pub horizon: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self {
            x0: [2.5, 0.0],
            z0: [-2.5, 0.0],
            metric: MetricSpec::Named(NamedMetric::WeightedAngle),
            horizon: 30.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntrainOptions {
    pub x0: f64,
    pub z0: f64,
    pub horizon: f64,
    /// Closes the loop `r = q - h(y)` with the scenario input as `q`; otherwise the scenario
    /// input drives the system open loop.
    pub feedback: Option<OutputFeedback>,
}

impl Default for EntrainOptions {
    fn default() -> Self {
        Self {
            x0: 0.3,
            z0: -2.0,
            horizon: 40.0,
            feedback: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterconnectOptions {
    /// Exogenous input of the second pendulum; the scenario input drives the first.
    pub q2: InputLaw,
    pub x0: [f64; 2],
    /// Second initial condition; when present the distance between the two runs of pendulum 1
    /// is reported.
    pub z0: Option<[f64; 2]>,
    pub horizon: f64,
}

impl Default for InterconnectOptions {
    fn default() -> Self {
        Self {
            q2: InputLaw::constant(0.0),
            x0: [0.3, 0.0],
            z0: None,
            horizon: 40.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeVerifyOptions {
    pub cone: ConeSpec,
    pub n_theta: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
    pub tau: f64,
}

impl Default for ConeVerifyOptions {
    fn default() -> Self {
        Self {
            cone: ConeSpec::default(),
            n_theta: 720,
            v_min: -3.0,
            v_max: 3.0,
            n_v: 13,
            tau: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfFieldOptions {
    pub cone: ConeSpec,
    pub n_theta: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
    pub push_time: f64,
    pub max_pushes: usize,
}

impl Default for PfFieldOptions {
    fn default() -> Self {
        Self {
            cone: ConeSpec::default(),
            n_theta: 72,
            v_min: -3.0,
            v_max: 3.0,
            n_v: 7,
            push_time: 1.0,
            max_pushes: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corollary2Options {
    pub cone: ConeSpec,
    pub rho: f64,
}

impl Default for Corollary2Options {
    fn default() -> Self {
        Self {
            cone: ConeSpec::default(),
            rho: diffgeo_core::positivity::DEFAULT_RHO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyOptions {
    pub cone: ConeSpec,
    pub x0: [f64; 2],
    pub horizon: f64,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        Self {
            cone: ConeSpec::default(),
            x0: [0.5, 0.0],
            horizon: 50.0,
        }
    }
}

/// Saddle manifolds exported next to the gap, thinned to one point per `spacing` of arclength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapOptions {
    pub arclength: f64,
    pub v_max: f64,
    pub spacing: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            arclength: 20.0,
            v_max: 5.0,
            spacing: 0.05,
        }
    }
}

pub type AtlasOptions = AtlasGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveOptions {
    pub ks: Vec<f64>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            ks: vec![0.05, 0.1, 0.2],
        }
    }
}
