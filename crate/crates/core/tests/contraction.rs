//! Finsler-Lyapunov metrics, decay scans, pair convergence and the passive interconnection.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use approx::assert_relative_eq;
use diffgeo_core::contraction::{
    horizontal_contraction_near_cycle, horizontal_factor_from, interconnect_passive, residual_w,
    scan_decay, storage_inequality_check, verify_pair_contraction, DecayGrid, OutputFeedback,
    PassiveFeedbackLoop, PassiveInterconnection,
};
use diffgeo_core::geometry::{
    analytic_vdot, chain_rule_vdot, cone_membership, eval_v, geodesic_distance, passivating_output,
    transversal_projection, ConeFieldSpec, ConeStatus, FinslerLyapunov,
};
use diffgeo_core::integrate::{flow_prolonged, IntegratorConfig};
use diffgeo_core::model::{
    CustomSystem, CylinderPoint, InputLaw, Mat2, OverdampedPendulum, Pendulum, StateSpace, Tangent,
    Vec2,
};
use diffgeo_core::orbits::{find_limit_cycle, CycleOptions};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn overdamped(u: f64) -> OverdampedPendulum {
    OverdampedPendulum::new(InputLaw::constant(u)).unwrap()
}

#[test]
fn metric_values() {
    let w = FinslerLyapunov::WeightedAngle;
    let sq = FinslerLyapunov::SquaredAngle;
    assert_eq!(eval_v(&w, CylinderPoint::new(0.0, 0.0), Tangent::new(1.0, 0.0)).unwrap(), 0.5);
    assert_eq!(eval_v(&sq, CylinderPoint::new(1.3, 0.0), Tangent::zero()).unwrap(), 0.0);
    assert_relative_eq!(
        eval_v(&w, CylinderPoint::new(FRAC_PI_2, 0.0), Tangent::new(2.0, 0.0)).unwrap(),
        4.0,
        epsilon = 1e-15
    );
}

#[test]
fn decay_rates_on_the_overdamped_pendulum() {
    let sys = overdamped(0.0);
    let p = CylinderPoint::new(0.0, 0.0);
    let d = Tangent::new(1.0, 0.0);
    // V = δθ² decays at twice the linear rate: d/dt δθ² = 2δθ·(-cos θ δθ)
    assert_relative_eq!(analytic_vdot(&FinslerLyapunov::SquaredAngle, &sys, p, d, 0.0).unwrap(), -2.0);
    let at = CylinderPoint::new(2.5, 0.0);
    let vd = analytic_vdot(&FinslerLyapunov::WeightedAngle, &sys, at, Tangent::new(3.0, 0.0), 0.0).unwrap();
    assert_relative_eq!(vd, -9.0, epsilon = 1e-12);
    let chain = chain_rule_vdot(&FinslerLyapunov::WeightedAngle, &sys, at, Tangent::new(3.0, 0.0), 0.0).unwrap();
    assert_relative_eq!(chain, -9.0, epsilon = 1e-9);

    let gain = OverdampedPendulum::new(InputLaw::half_angle_gain(InputLaw::constant(7.0))).unwrap();
    let vd = analytic_vdot(&FinslerLyapunov::WeightedAngle, &gain, CylinderPoint::new(1.0, 0.0), d, 0.0).unwrap();
    assert_relative_eq!(vd, -1.0, epsilon = 1e-12);
    let chain = chain_rule_vdot(&FinslerLyapunov::WeightedAngle, &gain, CylinderPoint::new(1.0, 0.0), d, 0.0).unwrap();
    assert_relative_eq!(chain, -1.0, epsilon = 1e-12);
}

#[test]
fn constant_metric_decay_in_the_scalar_case() {
    // With V = p δθ² the decay condition reads 2p ∂f ≤ -λp, i.e. cos θ > 0.
    let sys = overdamped(0.0);
    let v = FinslerLyapunov::constant_quadratic(Mat2::new(2.0, 0.0, 0.0, 1.0)).unwrap();
    for theta in [-1.2, 0.0, 0.4, 1.5] {
        let vd = analytic_vdot(&v, &sys, CylinderPoint::new(theta, 0.0), Tangent::new(1.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(vd, -4.0 * f64::cos(theta), epsilon = 1e-12);
    }
    let lower = scan_decay(&v, &sys, &DecayGrid::circle(-FRAC_PI_2 + 0.01, FRAC_PI_2 - 0.01, 101), None).unwrap();
    assert!(lower.certifies());
    let wide = scan_decay(&v, &sys, &DecayGrid::circle(-2.5, 2.5, 101), None).unwrap();
    assert!(!wide.certifies());
}

#[test]
fn geodesics_and_output() {
    let w = FinslerLyapunov::WeightedAngle;
    assert_eq!(geodesic_distance(&w, 0.7, 0.7).unwrap(), 0.0);
    assert_relative_eq!(geodesic_distance(&FinslerLyapunov::SquaredAngle, 0.0, 1.0).unwrap(), 1.0);
    let d = geodesic_distance(&w, 0.0, FRAC_PI_2).unwrap();
    assert_relative_eq!(d, SQRT_2 * (1.0 + SQRT_2).ln(), epsilon = 1e-12);
    let quad = simpson(|s| 1.0 / (1.0 + s.cos()).sqrt(), 0.0, FRAC_PI_2, 2000);
    assert_relative_eq!(d, quad, epsilon = 1e-10);

    assert_eq!(passivating_output(0.0).unwrap(), 0.0);
    let y = passivating_output(FRAC_PI_2).unwrap();
    assert_relative_eq!(y, 2.0 * (1.0 + SQRT_2).ln(), epsilon = 1e-12);
    assert_relative_eq!(y, simpson(|s| 1.0 / (s / 2.0).cos(), 0.0, FRAC_PI_2, 2000), epsilon = 1e-10);
    assert_relative_eq!(passivating_output(-FRAC_PI_2).unwrap(), -y, epsilon = 1e-15);
    assert!(passivating_output(PI).is_err());
}

#[test]
fn cone_membership_examples() {
    let cone = ConeFieldSpec::pendulum_default();
    let p = CylinderPoint::origin();
    let m = cone_membership(&cone, p, Tangent::new(1.0, 0.0)).unwrap();
    assert_eq!((m.status, m.margin), (ConeStatus::Interior, 1.0));
    let m = cone_membership(&cone, p, Tangent::new(0.0, 1.0)).unwrap();
    assert_eq!(m.status, ConeStatus::Boundary(vec![0]));
    let m = cone_membership(&cone, p, Tangent::new(-1.0, 0.0)).unwrap();
    assert_eq!(m.status, ConeStatus::Outside);
}

#[test]
fn transversal_projector_examples() {
    let constant = |f: Vec2| {
        CustomSystem::new(StateSpace::Plane, move |_, _| f, |_, _| Mat2::zeros())
    };
    let p = CylinderPoint::origin();
    let pr = transversal_projection(&constant(Vec2::new(1.0, 0.0)), p, 0.0).unwrap();
    assert_eq!(pr, Mat2::new(0.0, 0.0, 0.0, 1.0));
    let pr = transversal_projection(&constant(Vec2::new(0.0, 2.0)), p, 0.0).unwrap();
    assert_eq!(pr, Mat2::new(1.0, 0.0, 0.0, 0.0));
    let pr = transversal_projection(&constant(Vec2::new(1.0, 1.0)), p, 0.0).unwrap();
    assert!((pr - Mat2::new(0.5, -0.5, -0.5, 0.5)).abs().max() < 1e-15);
    assert!(transversal_projection(&constant(Vec2::zeros()), p, 0.0).is_err());
}

#[test]
fn decay_scans() {
    let sys = overdamped(0.0);
    let sq = FinslerLyapunov::SquaredAngle;
    let r = scan_decay(&sq, &sys, &DecayGrid::circle(-FRAC_PI_2 + 0.01, FRAC_PI_2 - 0.01, 201), None).unwrap();
    assert!(r.certifies());
    assert_relative_eq!(r.min_vdot, -2.0, epsilon = 1e-12);
    assert!(r.argmin.theta.abs() < 1e-12);
    let r = scan_decay(&sq, &sys, &DecayGrid::circle(0.0, 2.0, 21), None).unwrap();
    assert!(r.violation_count > 0);
    assert!(r.violations.iter().all(|s| s.theta.cos() < 0.0));

    let r = scan_decay(&FinslerLyapunov::WeightedAngle, &sys, &DecayGrid::circle(-PI + 0.01, PI - 0.01, 721), None).unwrap();
    assert!(r.certifies());
    assert_relative_eq!(r.min_vdot, -1.0, epsilon = 1e-12);
    assert_relative_eq!(r.max_vdot, -1.0, epsilon = 1e-12);
}

#[test]
fn residual_matches_finite_differences_along_the_flow() {
    assert_eq!(residual_w(0.8, 1.3, &InputLaw::constant(0.0), 0.0).unwrap(), 0.0);

    let input = InputLaw::constant(1.0);
    let sys = overdamped(1.0);
    let (theta, dtheta) = (2.0, 1.0);
    let w = residual_w(theta, dtheta, &input, 0.0).unwrap();
    assert!(w.abs() > 1e-3);

    let cfg = IntegratorConfig::adaptive(1e-13, 1e-13);
    let v_at = |t: f64| {
        let (x, d) = flow_prolonged(&sys, Vec2::new(theta, 0.0), Vec2::new(dtheta, 0.0), 0.0, t, &cfg).unwrap();
        d[0] * d[0] / (1.0 + x[0].cos())
    };
    let h = 1e-3;
    let fd = (v_at(-2.0 * h) - 8.0 * v_at(-h) + 8.0 * v_at(h) - v_at(2.0 * h)) / (12.0 * h);
    assert_relative_eq!(fd + dtheta * dtheta, w, epsilon = 1e-7);
}

#[test]
fn pair_contraction_examples() {
    let sys = overdamped(0.0);
    let cfg = IntegratorConfig::default();
    let w = FinslerLyapunov::WeightedAngle;
    let same = verify_pair_contraction(&sys, CylinderPoint::new(1.0, 0.0), CylinderPoint::new(1.0, 0.0), &w, &cfg, 10.0).unwrap();
    assert!(same.distances.iter().all(|&d| d == 0.0));

    let pc = verify_pair_contraction(&sys, CylinderPoint::new(2.5, 0.0), CylinderPoint::new(-2.5, 0.0), &w, &cfg, 30.0).unwrap();
    assert!(pc.terminal_distance() < 1e-3);
    assert!(pc.eventually_decreasing(1.0 / 30.0));
    let csv = pc.to_csv();
    assert!(csv.starts_with("t,distance\n"));
    assert_eq!(csv.lines().count(), pc.times.len() + 1);

    let r = InputLaw::sinusoidal(1.0, 0.5, PI);
    let driven = OverdampedPendulum::new(InputLaw::half_angle_gain(r)).unwrap();
    let pc = verify_pair_contraction(&driven, CylinderPoint::new(0.3, 0.0), CylinderPoint::new(-2.0, 0.0), &w, &cfg, 40.0).unwrap();
    assert!(pc.terminal_distance() < 1e-3);
}

#[test]
fn feedback_loops_entrain() {
    let cfg = IntegratorConfig::default();
    let q = InputLaw::sinusoidal(1.0, 0.5, PI);
    for h in [OutputFeedback::Linear, OutputFeedback::CubicPlusLinear] {
        let sys = PassiveFeedbackLoop::new(h, q.clone()).unwrap();
        let pc = verify_pair_contraction(
            &sys,
            CylinderPoint::new(0.3, 0.0),
            CylinderPoint::new(-2.0, 0.0),
            &FinslerLyapunov::WeightedAngle,
            &cfg,
            40.0,
        )
        .unwrap();
        assert!(pc.terminal_distance() < 1e-3, "{h:?}: {}", pc.terminal_distance());
    }
}

#[test]
fn interconnection_rest_and_storage() {
    let cfg = IntegratorConfig::default();
    let zero = InputLaw::constant(0.0);
    let (a, b) = interconnect_passive(&zero, &zero, (0.0, 0.0), &cfg, 10.0).unwrap();
    assert!(a.states.iter().chain(&b.states).all(|p| p.theta() == 0.0));

    let sys = PassiveInterconnection::new(InputLaw::sinusoidal(1.0, 0.5, PI), zero).unwrap();
    for (x0, d0) in [((0.5, -0.3), Tangent::new(1.0, 0.2)), ((-2.0, 1.0), Tangent::new(-0.4, 1.0))] {
        let check = storage_inequality_check(&sys, x0, d0, &cfg, 20.0).unwrap();
        assert!(check.samples > 100);
        assert!(check.max_excess <= 1e-9, "excess {}", check.max_excess);
        assert!(check.max_identity_error <= 1e-9);
    }
}

#[test]
fn horizontal_factor_on_the_cycle() {
    let cfg = IntegratorConfig::default();
    let sys = Pendulum::constant(0.5, 1.5).unwrap();
    let cycle = find_limit_cycle(&sys, &cfg, &CycleOptions::for_pendulum(0.5, 1.5)).unwrap();
    let h = horizontal_contraction_near_cycle(&cycle, &sys, &cfg).unwrap();
    assert!(h.factor > 0.0 && h.factor < 1.0);
    assert!(h.relative_difference <= 0.05);
    let flipped = horizontal_factor_from(&cycle, &sys, &cfg, -1.0).unwrap();
    assert_relative_eq!(flipped.factor, h.factor, max_relative = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weighted_decay_is_exact_without_input(theta in -(PI - 1e-3)..(PI - 1e-3), d in -10.0f64..10.0) {
        let vd = analytic_vdot(&FinslerLyapunov::WeightedAngle, &overdamped(0.0), CylinderPoint::new(theta, 0.0), Tangent::new(d, 0.0), 0.0).unwrap();
        prop_assert!((vd + d * d).abs() <= 1e-12 * (1.0 + d * d));
    }

    #[test]
    fn geodesic_is_a_metric(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let w = FinslerLyapunov::WeightedAngle;
        let ab = geodesic_distance(&w, a, b).unwrap();
        prop_assert!((ab - geodesic_distance(&w, b, a).unwrap()).abs() < 1e-12);
        let via = geodesic_distance(&w, a, c).unwrap() + geodesic_distance(&w, c, b).unwrap();
        prop_assert!(ab <= via + 1e-12);
    }

    #[test]
    fn cone_is_closed_under_positive_combinations(a in 0.0f64..5.0, b in 0.0f64..5.0, theta in -PI..PI) {
        prop_assume!(a + b > 1e-6);
        let cone = ConeFieldSpec::pendulum_default();
        let p = CylinderPoint::new(theta, 0.3);
        let [r1, r2] = cone.boundary_rays(p);
        let d = a * r1 + b * r2;
        let m = cone_membership(&cone, p, Tangent::from_vec(d)).unwrap();
        prop_assert!(m.status != ConeStatus::Outside);
    }
}
