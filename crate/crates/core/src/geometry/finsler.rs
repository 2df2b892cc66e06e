use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    wrap_angle, wrapped_difference, CylinderPoint, InputLaw, Mat2, PlanarSystem, Tangent,
};

/// Default truncation `η` of the weighted metric's domain `|θ| ≤ π - η`.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Quadratic Finsler-Lyapunov functions `V(x, δx)` of degree two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinslerLyapunov {
    /// `V = δθ²`
    SquaredAngle,
    /// `V = δθ² / (1 + cos θ)`, singular at the upright position.
    WeightedAngle,
    /// `V = δxᵀ P δx` with constant symmetric positive definite `P`.
    ConstantQuadratic(Mat2),
}

impl FinslerLyapunov {
    pub fn constant_quadratic(p: Mat2) -> Result<Self> {
        if (p[(0, 1)] - p[(1, 0)]).abs() > 1e-12 * p.norm() {
            return Err(Error::InvalidConfig("P must be symmetric".into()));
        }
        if !(p[(0, 0)] > 0.0 && p.determinant() > 0.0) {
            return Err(Error::InvalidConfig("P must be positive definite".into()));
        }
        Ok(FinslerLyapunov::ConstantQuadratic(p))
    }

    /// Riemannian metric tensor `P(x)` with `V = δxᵀ P(x) δx`.
    pub fn metric_tensor(&self, p: CylinderPoint) -> Result<Mat2> {
        Ok(match self {
            FinslerLyapunov::SquaredAngle => Mat2::new(1.0, 0.0, 0.0, 0.0),
            FinslerLyapunov::WeightedAngle => {
                check_weighted_domain(p.theta())?;
                Mat2::new(1.0 / (1.0 + p.theta().cos()), 0.0, 0.0, 0.0)
            }
            FinslerLyapunov::ConstantQuadratic(m) => *m,
        })
    }

    /// `∂P/∂θ`; every shipped metric is independent of `v`.
    fn metric_theta_derivative(&self, theta: f64) -> Mat2 {
        match self {
            FinslerLyapunov::WeightedAngle => {
                let c = 1.0 + theta.cos();
                Mat2::new(theta.sin() / (c * c), 0.0, 0.0, 0.0)
            }
            _ => Mat2::zeros(),
        }
    }

    /// Constants `c₁ ≤ V/|δ|² ≤ c₂` on the domain where they hold. For the angular metrics `|δ|`
    /// is `|δθ|`; the weighted metric is certified on `|θ| ≤ π - η` only.
    pub fn bounds(&self, eta: f64) -> Result<(f64, f64)> {
        match self {
            FinslerLyapunov::SquaredAngle => Ok((1.0, 1.0)),
            FinslerLyapunov::WeightedAngle => {
                if !(eta > 0.0 && eta < PI) {
                    return Err(Error::Domain(format!("eta must lie in (0, π), got {eta}")));
                }
                Ok((0.5, 1.0 / (1.0 + (PI - eta).cos())))
            }
            FinslerLyapunov::ConstantQuadratic(m) => {
                let eig = m.symmetric_eigenvalues();
                Ok((eig.min(), eig.max()))
            }
        }
    }

    /// Largest `|θ|` on which decay may be claimed.
    pub fn angular_domain(&self, eta: f64) -> f64 {
        match self {
            FinslerLyapunov::WeightedAngle => PI - eta,
            _ => PI,
        }
    }
}

fn check_weighted_domain(theta: f64) -> Result<()> {
    if wrap_angle(theta) == -PI || !theta.is_finite() {
        Err(Error::Domain(
            "weighted metric is singular at θ = ±π".into(),
        ))
    } else {
        Ok(())
    }
}

pub fn eval_v(v: &FinslerLyapunov, p: CylinderPoint, d: Tangent) -> Result<f64> {
    Ok(match v {
        FinslerLyapunov::SquaredAngle => d.dtheta * d.dtheta,
        FinslerLyapunov::WeightedAngle => {
            check_weighted_domain(p.theta())?;
            d.dtheta * d.dtheta / (1.0 + p.theta().cos())
        }
        FinslerLyapunov::ConstantQuadratic(m) => {
            let x = d.to_vec();
            x.dot(&(m * x))
        }
    })
}

/// Lie derivative of `V` along the prolonged flow, `∂ₓV·f + ∂_δV·∂f δx`.
///
/// For the weighted metric on the overdamped pendulum the closed form `-δθ² + w` is used; it
/// avoids the cancellation the chain rule suffers next to the singularity.
pub fn analytic_vdot(
    v: &FinslerLyapunov,
    sys: &dyn PlanarSystem,
    p: CylinderPoint,
    d: Tangent,
    t: f64,
) -> Result<f64> {
    if let (FinslerLyapunov::WeightedAngle, Some(od)) = (v, sys.as_overdamped()) {
        let w = residual_w(p.theta(), d.dtheta, od.input(), t)?;
        return Ok(-d.dtheta * d.dtheta + w);
    }
    chain_rule_vdot(v, sys, p, d, t)
}

/// `V̇` by the plain chain rule, valid for every system.
pub fn chain_rule_vdot(
    v: &FinslerLyapunov,
    sys: &dyn PlanarSystem,
    p: CylinderPoint,
    d: Tangent,
    t: f64,
) -> Result<f64> {
    let m = metric_decay_matrix(v, sys, p, t)?;
    let x = d.to_vec();
    Ok(x.dot(&(m * x)))
}

/// `∂fᵀP + P∂f + Ṗ`, whose quadratic form is `V̇`; negative definiteness on the measured
/// components is the metric decay condition.
pub fn metric_decay_matrix(
    v: &FinslerLyapunov,
    sys: &dyn PlanarSystem,
    p: CylinderPoint,
    t: f64,
) -> Result<Mat2> {
    let pm = v.metric_tensor(p)?;
    let x = p.to_vec();
    let j = sys.jacobian(x, t);
    let f = sys.field(x, t);
    let pdot = v.metric_theta_derivative(p.theta()) * f[0];
    Ok(j.transpose() * pm + pm * j + pdot)
}

/// Input-induced part `w = V̇ + δθ²` of the weighted metric's decay on the overdamped pendulum,
/// `w = δθ² sec(θ/2) ∂/∂θ[u sec(θ/2)]`.
///
/// For the half-angle gain `u = cos(θ/2) r` the bracket is `∂r/∂θ`, taken from `r` directly so
/// that the uniform-in-`r` cancellation is exact.
pub fn residual_w(theta: f64, dtheta: f64, input: &InputLaw, t: f64) -> Result<f64> {
    check_weighted_domain(theta)?;
    let half = 0.5 * wrap_angle(theta);
    let sec = 1.0 / half.cos();
    let bracket = match input {
        InputLaw::HalfAngleGain { r } => r.partials(theta, 0.0, t).0,
        _ => {
            let u = input.eval(theta, 0.0, t);
            let (u_theta, _) = input.partials(theta, 0.0, t);
            sec * (u_theta + 0.5 * u * half.tan())
        }
    };
    Ok(dtheta * dtheta * sec * bracket)
}

/// `y = ∫₀^θ sec(s/2) ds = 2 asinh(tan(θ/2))`, the differentially passivating output.
pub fn passivating_output(theta: f64) -> Result<f64> {
    if !(theta.abs() < PI) {
        return Err(Error::Domain(format!(
            "passivating output diverges at |θ| = π (θ = {theta})"
        )));
    }
    Ok(2.0 * (0.5 * theta).tan().asinh())
}

/// Geodesic distance between two angles.
///
/// The squared-angle metric takes the shorter arc. Under the weighted metric any arc through
/// `θ = ±π` has infinite length, so the geodesic is the arc avoiding the top, whichever is shorter.
pub fn geodesic_distance(v: &FinslerLyapunov, a: f64, b: f64) -> Result<f64> {
    match v {
        FinslerLyapunov::SquaredAngle => Ok(wrapped_difference(b, a).abs()),
        FinslerLyapunov::WeightedAngle => {
            check_weighted_domain(a)?;
            check_weighted_domain(b)?;
            let (a, b) = (wrap_angle(a), wrap_angle(b));
            Ok((passivating_output(b)? - passivating_output(a)?).abs() / SQRT_2)
        }
        FinslerLyapunov::ConstantQuadratic(_) => Err(Error::Domain(
            "geodesic distance is provided for the angular metrics only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OverdampedPendulum, Pendulum};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        // composite Simpson, fine enough for smooth integrands
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn eval_examples() {
        let w = FinslerLyapunov::WeightedAngle;
        assert_relative_eq!(eval_v(&w, CylinderPoint::origin(), Tangent::new(1.0, 0.0)).unwrap(), 0.5);
        assert_relative_eq!(
            eval_v(&w, CylinderPoint::new(FRAC_PI_2, 0.0), Tangent::new(2.0, 0.0)).unwrap(),
            4.0,
            epsilon = 1e-14
        );
        let s = FinslerLyapunov::SquaredAngle;
        assert_eq!(eval_v(&s, CylinderPoint::new(1.3, 0.2), Tangent::new(0.0, 5.0)).unwrap(), 0.0);
        assert!(eval_v(&w, CylinderPoint::new(PI, 0.0), Tangent::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn vdot_examples() {
        let free = OverdampedPendulum::new(InputLaw::constant(0.0)).unwrap();
        let s = FinslerLyapunov::SquaredAngle;
        let w = FinslerLyapunov::WeightedAngle;
        // V = δθ² gives V̇ = 2 δθ δθ̇ = -2 cos θ δθ²
        let vd = analytic_vdot(&s, &free, CylinderPoint::origin(), Tangent::new(1.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(vd, -2.0);
        let vd = analytic_vdot(&w, &free, CylinderPoint::new(2.5, 0.0), Tangent::new(3.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(vd, -9.0, epsilon = 1e-12);
        let gain = OverdampedPendulum::new(InputLaw::half_angle_gain(InputLaw::constant(7.0))).unwrap();
        let vd = analytic_vdot(&w, &gain, CylinderPoint::new(1.0, 0.0), Tangent::new(1.0, 0.0), 0.0).unwrap();
        assert_eq!(vd, -1.0);
    }

    #[test]
    fn structured_and_chain_rule_routes_agree() {
        let sys = OverdampedPendulum::new(InputLaw::sinusoidal(0.3, 0.8, 2.0)).unwrap();
        let w = FinslerLyapunov::WeightedAngle;
        for i in 0..200 {
            let theta = -3.0 + 6.0 * i as f64 / 199.0;
            let p = CylinderPoint::new(theta, 0.0);
            let d = Tangent::new(0.7, 0.0);
            let a = analytic_vdot(&w, &sys, p, d, 0.4).unwrap();
            let b = chain_rule_vdot(&w, &sys, p, d, 0.4).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "θ={theta}: {a} vs {b}");
        }
    }

    #[test]
    fn residual_w_vanishes_without_input_and_not_with_constant_torque() {
        let zero = InputLaw::constant(0.0);
        assert_eq!(residual_w(1.2, 0.8, &zero, 0.0).unwrap(), 0.0);
        let one = InputLaw::constant(1.0);
        let w = residual_w(2.0, 1.0, &one, 0.0).unwrap();
        // u sin θ / (1 + cos θ)² for constant u
        let oracle = 2.0f64.sin() / (1.0 + 2.0f64.cos()).powi(2);
        assert_relative_eq!(w, oracle, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_examples() {
        let w = FinslerLyapunov::WeightedAngle;
        assert_eq!(geodesic_distance(&w, 0.7, 0.7).unwrap(), 0.0);
        assert_relative_eq!(geodesic_distance(&FinslerLyapunov::SquaredAngle, 0.0, 1.0).unwrap(), 1.0);
        let expect = SQRT_2 * (1.0 + SQRT_2).ln();
        assert_relative_eq!(geodesic_distance(&w, 0.0, FRAC_PI_2).unwrap(), expect, epsilon = 1e-14);
        assert_relative_eq!(expect, 1.246450, epsilon = 1e-6);
        let q = quad(|s| 1.0 / (1.0 + s.cos()).sqrt(), 0.0, FRAC_PI_2);
        assert_relative_eq!(q, expect, epsilon = 1e-12);
        assert!(geodesic_distance(&w, PI, 0.0).is_err());
        // the short way from 3 to -3 crosses the top, so the geodesic runs through the bottom
        let long_way = geodesic_distance(&w, 3.0, 0.0).unwrap() * 2.0;
        assert_relative_eq!(geodesic_distance(&w, 3.0, -3.0).unwrap(), long_way, epsilon = 1e-12);
    }

    #[test]
    fn passivating_output_examples() {
        assert_eq!(passivating_output(0.0).unwrap(), 0.0);
        let y = passivating_output(FRAC_PI_2).unwrap();
        assert_relative_eq!(y, 2.0 * (1.0 + SQRT_2).ln(), epsilon = 1e-14);
        assert_relative_eq!(y, 1.762747, epsilon = 1e-6);
        let q = quad(|s| 1.0 / (0.5 * s).cos(), 0.0, FRAC_PI_2);
        assert_relative_eq!(q, y, epsilon = 1e-12);
        assert_relative_eq!(passivating_output(-FRAC_PI_2).unwrap(), -y);
        assert!(passivating_output(PI).is_err());
    }

    #[test]
    fn weighted_bounds() {
        let (c1, c2) = FinslerLyapunov::WeightedAngle.bounds(1e-3).unwrap();
        assert_eq!(c1, 0.5);
        assert_relative_eq!(c2, 1.0 / (1.0 + (PI - 1e-3).cos()));
        assert!(FinslerLyapunov::constant_quadratic(Mat2::new(1.0, 2.0, 2.0, 1.0)).is_err());
    }

    #[test]
    fn metric_matrix_realizes_weighted_decay() {
        let free = OverdampedPendulum::new(InputLaw::constant(0.0)).unwrap();
        for theta in [-3.0, -1.0, 0.0, 0.5, 2.9] {
            let m = metric_decay_matrix(&FinslerLyapunov::WeightedAngle, &free, CylinderPoint::new(theta, 0.0), 0.0)
                .unwrap();
            assert_relative_eq!(m[(0, 0)], -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_vdot_on_linearized_pendulum() {
        let p = Pendulum::constant(3.0, 0.0).unwrap();
        let v = FinslerLyapunov::constant_quadratic(Mat2::identity()).unwrap();
        // at the bottom, V̇ = δᵀ(A + Aᵀ)δ with A = [[0,1],[-1,-3]]
        let d = Tangent::new(0.0, 1.0);
        let vd = analytic_vdot(&v, &p, CylinderPoint::origin(), d, 0.0).unwrap();
        assert_relative_eq!(vd, -6.0);
    }

    proptest! {
        #[test]
        fn homogeneous_of_degree_two(theta in -3.1f64..3.1, dth in -5.0f64..5.0, dv in -5.0f64..5.0, lam in -4.0f64..4.0) {
            let p = CylinderPoint::new(theta, 0.3);
            let d = Tangent::new(dth, dv);
            for v in [FinslerLyapunov::SquaredAngle, FinslerLyapunov::WeightedAngle,
                      FinslerLyapunov::ConstantQuadratic(Mat2::new(2.0, 0.5, 0.5, 1.0))] {
                let a = eval_v(&v, p, d.scale(lam)).unwrap();
                let b = lam * lam * eval_v(&v, p, d).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn weighted_distance_obeys_triangle_inequality(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let w = FinslerLyapunov::WeightedAngle;
            let ab = geodesic_distance(&w, a, b).unwrap();
            let bc = geodesic_distance(&w, b, c).unwrap();
            let ac = geodesic_distance(&w, a, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!((ab - geodesic_distance(&w, b, a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn equal_arcs_lengthen_towards_the_top(a in 0.0f64..2.0, step in 0.01f64..0.5) {
            prop_assume!(a + 2.0 * step < PI);
            let w = FinslerLyapunov::WeightedAngle;
            let d1 = geodesic_distance(&w, a, a + step).unwrap();
            let d2 = geodesic_distance(&w, a + step, a + 2.0 * step).unwrap();
            prop_assert!(d1 < d2);
        }

        #[test]
        fn passivating_output_derivative_is_half_angle_secant(theta in -3.0f64..3.0) {
            let h = 1e-6;
            let fd = (passivating_output(theta + h).unwrap() - passivating_output(theta - h).unwrap()) / (2.0 * h);
            let exact = 1.0 / (0.5 * theta).cos();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.max(1.0));
        }
    }
}
