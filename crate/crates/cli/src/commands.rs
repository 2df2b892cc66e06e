use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use diffgeo_core::atlas::{atlas_csv, curve_csv, estimate_kc, homoclinic_curve, scan_atlas};
use diffgeo_core::contraction::{
    horizontal_contraction_near_cycle, interconnect_pair_convergence, interconnect_passive,
    scan_decay, verify_pair_contraction, DecayGrid, PassiveFeedbackLoop,
};
use diffgeo_core::geometry::FinslerLyapunov;
use diffgeo_core::integrate::{
    integrate_fundamental, integrate_prolonged, integrate_state, IntegratorConfig,
};
use diffgeo_core::model::{CylinderPoint, PlanarSystem, Tangent};
use diffgeo_core::orbits::{
    find_fixed_points, find_limit_cycle, floquet_multipliers, homoclinic_gap, max_lyapunov_exponent,
    pendulum_saddle, saddle_manifolds, BranchKind, CycleOptions, LimitCycle,
};
use diffgeo_core::positivity::{
    certify_corollary2, dichotomy_classify, pf_vector_field, verify_cone_invariance, StateGrid,
};
use diffgeo_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::scenario::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Prolonged,
    Fundamental,
    FixedPoints,
    LimitCycle,
    Floquet,
    Lyapunov,
    DecayScan,
    PairContraction,
    Entrain,
    Interconnect,
    Horizontal,
    ConeVerify,
    PfField,
    Corollary2,
    Dichotomy,
    HomoclinicGap,
    Atlas,
    HomoclinicCurve,
    CriticalDamping,
}

/// How an analysis that ran to completion came out.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The analysis ran but the property was not established.
    Negative(String),
}

/// Files produced by one run, written only after the analysis succeeds.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut body = serde_json::to_string_pretty(value).expect("artifact serializes");
        body.push('\n');
        self.text(name, body);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// The scenario with this command's options filled in with every default.
pub fn resolve(cmd: Command, s: &Scenario) -> Result<Scenario> {
    Ok(match cmd {
        Command::Simulate | Command::Fundamental => s.resolved(&s.options::<SimulateOptions>()?),
        Command::Prolonged => s.resolved(&s.options::<ProlongedOptions>()?),
        Command::FixedPoints | Command::CriticalDamping => s.resolved(&s.options::<NoOptions>()?),
        Command::HomoclinicGap => s.resolved(&s.options::<GapOptions>()?),
        Command::LimitCycle | Command::Floquet | Command::Horizontal => {
            s.resolved(&s.options::<CycleOptionsSpec>()?)
        }
        Command::Lyapunov => s.resolved(&s.options::<LyapunovOptions>()?),
        Command::DecayScan => s.resolved(&s.options::<DecayOptions>()?),
        Command::PairContraction => s.resolved(&s.options::<PairOptions>()?),
        Command::Entrain => s.resolved(&s.options::<EntrainOptions>()?),
        Command::Interconnect => s.resolved(&s.options::<InterconnectOptions>()?),
        Command::ConeVerify => s.resolved(&s.options::<ConeVerifyOptions>()?),
        Command::PfField => s.resolved(&s.options::<PfFieldOptions>()?),
        Command::Corollary2 => s.resolved(&s.options::<Corollary2Options>()?),
        Command::Dichotomy => s.resolved(&s.options::<DichotomyOptions>()?),
        Command::Atlas => s.resolved(&s.options::<AtlasOptions>()?),
        Command::HomoclinicCurve => s.resolved(&s.options::<CurveOptions>()?),
    })
}

fn system(s: &Scenario) -> Result<Box<dyn PlanarSystem>> {
    Ok(match s.system {
        SystemKind::Pendulum => Box::new(s.pendulum()?),
        SystemKind::Overdamped => Box::new(s.overdamped()?),
    })
}

fn point(x: [f64; 2]) -> CylinderPoint {
    CylinderPoint::new(x[0], x[1])
}

fn sampled(cfg: &IntegratorConfig, horizon: f64) -> IntegratorConfig {
    IntegratorConfig {
        sample_dt: Some(cfg.sample_dt.unwrap_or(horizon / 1000.0)),
        ..cfg.clone()
    }
}

fn check_horizon(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig("horizon must be positive".into()))
    }
}

fn cycle_for(s: &Scenario, opts: &CycleOptionsSpec) -> Result<LimitCycle> {
    let (k, u) = s.constant_torque()?;
    let sys = s.pendulum()?;
    let mut co = CycleOptions::for_pendulum(k, u).at_section(opts.section_theta);
    if let Some(v) = opts.guess_v {
        co.guess_v = v;
    }
    if opts.samples < 2 {
        return Err(Error::InvalidConfig("samples must be at least 2".into()));
    }
    co.samples = opts.samples;
    find_limit_cycle(&sys, &s.integrator, &co)
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs `cmd` on a parsed scenario, returning the artifacts and whether the result is positive.
pub fn run(cmd: Command, s: &Scenario) -> Result<(Artifacts, Outcome)> {
    let cfg = &s.integrator;
    let mut out = Artifacts::default();
    let mut outcome = Outcome::Done;
    match cmd {
        Command::Simulate => {
            let o: SimulateOptions = s.options()?;
            check_horizon(o.horizon)?;
            let sys = system(s)?;
            let tr = integrate_state(sys.as_ref(), point(o.x0), &sampled(cfg, o.horizon), (0.0, o.horizon))?;
            out.text("trajectory.csv", tr.to_csv());
        }
        Command::Prolonged => {
            let o: ProlongedOptions = s.options()?;
            check_horizon(o.horizon)?;
            let sys = system(s)?;
            let d0 = Tangent::new(o.d0[0], o.d0[1]);
            let tr = integrate_prolonged(sys.as_ref(), point(o.x0), d0, &sampled(cfg, o.horizon), (0.0, o.horizon))?;
            out.text("trajectory.csv", tr.to_csv());
        }
        Command::Fundamental => {
            let o: SimulateOptions = s.options()?;
            check_horizon(o.horizon)?;
            let sys = system(s)?;
            let tr = integrate_fundamental(sys.as_ref(), point(o.x0), &sampled(cfg, o.horizon), (0.0, o.horizon))?;
            out.text("trajectory.csv", tr.to_csv());
        }
        Command::FixedPoints => {
            let _: NoOptions = s.options()?;
            let fps = find_fixed_points(&s.params()?)?;
            let records: Vec<_> = fps
                .iter()
                .map(|fp| {
                    json!({
                        "theta": fp.point.theta(),
                        "v": fp.point.v(),
                        "classification": fp.classification,
                        "stable": fp.is_stable(),
                        "eigenvalues": fp.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json("fixed_points.json", &records);
        }
        Command::LimitCycle => {
            let o: CycleOptionsSpec = s.options()?;
            let c = cycle_for(s, &o)?;
            out.json("cycle.json", &cycle_record(&c, s.params()?.k));
            out.text("cycle.csv", c.samples.to_csv());
        }
        Command::Floquet => {
            let o: CycleOptionsSpec = s.options()?;
            let c = cycle_for(s, &o)?;
            let sys = s.pendulum()?;
            let k = s.params()?.k;
            let (r1, r2) = floquet_multipliers(&c, &sys, cfg)?;
            let expected = (-k * c.period).exp();
            out.json(
                "floquet.json",
                &json!({
                    "period": c.period,
                    "rho1": r1,
                    "rho2": r2,
                    "product": r1 * r2,
                    "exp_minus_kT": expected,
                    "product_relative_error": ((r1 * r2 - expected) / expected).abs(),
                }),
            );
        }
        Command::Lyapunov => {
            let o: LyapunovOptions = s.options()?;
            let sys = system(s)?;
            let est = max_lyapunov_exponent(
                sys.as_ref(),
                point(o.x0),
                Tangent::new(o.d0[0], o.d0[1]),
                cfg,
                o.horizon,
                o.renorm_interval,
            )?;
            out.json("lyapunov.json", &json!({ "exponent": est.exponent, "band": est.band }));
            let mut csv = String::from("t,estimate\n");
            for (t, l) in &est.trace {
                let _ = writeln!(csv, "{},{}", f(*t), f(*l));
            }
            out.text("lyapunov.csv", csv);
        }
        Command::DecayScan => {
            let o: DecayOptions = s.options()?;
            let sys = system(s)?;
            let grid = DecayGrid {
                n_directions: o.n_directions,
                t: o.t,
                ..DecayGrid::cylinder(o.theta_min, o.theta_max, o.n_theta, o.v_values.clone())
            };
            let report = scan_decay(&o.metric.build()?, sys.as_ref(), &grid, o.projection)?;
            if !report.certifies() {
                outcome = Outcome::Negative(format!(
                    "{} samples violate the decay condition",
                    report.violation_count
                ));
            }
            out.json("decay.json", &report);
        }
        Command::PairContraction => {
            let o: PairOptions = s.options()?;
            check_horizon(o.horizon)?;
            let sys = system(s)?;
            let pc = verify_pair_contraction(sys.as_ref(), point(o.x0), point(o.z0), &o.metric.build()?, cfg, o.horizon)?;
            out.json("pair.json", &pair_summary(&pc));
            out.text("pair.csv", pc.to_csv());
        }
        Command::Entrain => {
            let o: EntrainOptions = s.options()?;
            check_horizon(o.horizon)?;
            let sys: Box<dyn PlanarSystem> = match o.feedback {
                Some(h) => {
                    s.overdamped()?;
                    Box::new(PassiveFeedbackLoop::new(h, s.input.clone())?)
                }
                None => Box::new(s.overdamped()?),
            };
            let (x0, z0) = (CylinderPoint::new(o.x0, 0.0), CylinderPoint::new(o.z0, 0.0));
            let sc = sampled(cfg, o.horizon);
            let pc = verify_pair_contraction(sys.as_ref(), x0, z0, &FinslerLyapunov::WeightedAngle, &sc, o.horizon)?;
            let a = integrate_state(sys.as_ref(), x0, &sc, (0.0, o.horizon))?;
            let b = integrate_state(sys.as_ref(), z0, &sc, (0.0, o.horizon))?;
            out.text("x.csv", a.to_csv());
            out.text("z.csv", b.to_csv());
            out.json("pair.json", &pair_summary(&pc));
            out.text("pair.csv", pc.to_csv());
        }
        Command::Interconnect => {
            let o: InterconnectOptions = s.options()?;
            check_horizon(o.horizon)?;
            s.overdamped()?;
            let x0 = (o.x0[0], o.x0[1]);
            let (a, b) = interconnect_passive(&s.input, &o.q2, x0, cfg, o.horizon)?;
            out.text("pendulum1.csv", a.to_csv());
            out.text("pendulum2.csv", b.to_csv());
            if let Some(z) = o.z0 {
                let pc = interconnect_pair_convergence(&s.input, &o.q2, x0, (z[0], z[1]), cfg, o.horizon)?;
                out.json("pair.json", &pair_summary(&pc));
                out.text("pair.csv", pc.to_csv());
            }
        }
        Command::Horizontal => {
            let o: CycleOptionsSpec = s.options()?;
            let c = cycle_for(s, &o)?;
            let h = horizontal_contraction_near_cycle(&c, &s.pendulum()?, cfg)?;
            out.json("horizontal.json", &h);
        }
        Command::ConeVerify => {
            let o: ConeVerifyOptions = s.options()?;
            let grid = StateGrid::new(o.n_theta, o.v_min, o.v_max, o.n_v)?;
            let report = verify_cone_invariance(&s.pendulum()?, &o.cone.build()?, &grid, o.tau, cfg)?;
            if !report.verdict.is_strict() {
                outcome = Outcome::Negative(format!("verdict {}", report.verdict.name()));
            }
            out.json("cone.json", &report);
        }
        Command::PfField => {
            let o: PfFieldOptions = s.options()?;
            let grid = StateGrid::new(o.n_theta, o.v_min, o.v_max, o.n_v)?;
            let field = pf_vector_field(&s.pendulum()?, &o.cone.build()?, &grid, o.push_time, o.max_pushes, cfg)?;
            out.text("pf_field.csv", field.to_csv());
            out.json(
                "pf_field.json",
                &json!({
                    "push_time": field.push_time,
                    "points": field.points.len(),
                    "unconverged": field.unconverged,
                }),
            );
        }
        Command::Corollary2 => {
            let o: Corollary2Options = s.options()?;
            let result = certify_corollary2(&s.params()?, &o.cone.build()?, cfg, o.rho)?;
            if !result.is_certified() {
                outcome = Outcome::Negative("limit cycle not certified".into());
            }
            out.json("corollary2.json", &result);
        }
        Command::Dichotomy => {
            let o: DichotomyOptions = s.options()?;
            check_horizon(o.horizon)?;
            let d = dichotomy_classify(&s.pendulum()?, &o.cone.build()?, point(o.x0), cfg, o.horizon)?;
            out.json("dichotomy.json", &d);
        }
        Command::HomoclinicGap => {
            let o: GapOptions = s.options()?;
            if !(o.arclength > 0.0 && o.v_max > 0.0 && o.spacing > 0.0) {
                return Err(Error::InvalidConfig("arclength, v_max and spacing must be positive".into()));
            }
            let (k, u) = s.constant_torque()?;
            let params = s.params()?;
            let gap = homoclinic_gap(&params, cfg)?;
            out.json("gap.json", &json!({ "k": k, "u": u, "gap": gap }));
            let saddle = pendulum_saddle(&params)?;
            let branches = saddle_manifolds(&saddle, &s.pendulum()?, cfg, o.arclength, o.v_max)?;
            let mut csv = String::from("branch,s,theta,v\n");
            for b in &branches {
                let name = match (b.kind, b.sign > 0) {
                    (BranchKind::Unstable, true) => "unstable+",
                    (BranchKind::Unstable, false) => "unstable-",
                    (BranchKind::Stable, true) => "stable+",
                    (BranchKind::Stable, false) => "stable-",
                };
                let last = b.points.len() - 1;
                let mut next = 0.0;
                for (i, (p, &sl)) in b.points.iter().zip(&b.arclength).enumerate() {
                    if sl >= next || i == last {
                        let _ = writeln!(csv, "{name},{},{},{}", f(sl), f(p.theta()), f(p.v()));
                        next = sl + o.spacing;
                    }
                }
            }
            out.text("manifolds.csv", csv);
        }
        Command::Atlas => {
            let grid: AtlasOptions = s.options()?;
            let cells = scan_atlas(&grid, cfg)?;
            out.text("atlas.csv", atlas_csv(&cells));
        }
        Command::HomoclinicCurve => {
            let o: CurveOptions = s.options()?;
            let curve = homoclinic_curve(&o.ks, cfg)?;
            out.text("curve.csv", curve_csv(&curve));
        }
        Command::CriticalDamping => {
            let _: NoOptions = s.options()?;
            out.json("kc.json", &estimate_kc(cfg)?);
        }
    }
    Ok((out, outcome))
}

fn cycle_record(c: &LimitCycle, k: f64) -> serde_json::Value {
    json!({
        "anchor": { "theta": c.anchor.theta(), "v": c.anchor.v() },
        "period": c.period,
        "winding": c.winding,
        "rho1": c.multipliers.0,
        "rho2": c.multipliers.1,
        "exp_minus_kT": (-k * c.period).exp(),
    })
}

fn pair_summary(pc: &diffgeo_core::contraction::PairConvergence) -> serde_json::Value {
    json!({
        "terminal_distance": pc.terminal_distance(),
        "eventually_decreasing": pc.eventually_decreasing(0.2),
    })
}

