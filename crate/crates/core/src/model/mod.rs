//! The pendulum family and the planar-system abstraction used by every analysis.

mod input;
mod point;
mod systems;

pub use input::InputLaw;
pub use point::{winding_of, wrap_angle, wrapped_difference, CylinderPoint, Mat2, Tangent, Vec2};
pub use systems::{
    finite_difference_jacobian, CustomSystem, OverdampedPendulum, Pendulum, PendulumParams,
    PlanarSystem, StateSpace,
};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;

/// Velocity `(θ̇, v̇)` of the full pendulum.
pub fn pendulum_field(p: CylinderPoint, params: &PendulumParams, t: f64) -> Tangent {
    let u = params.input.eval(p.theta(), p.v(), t);
    Tangent::new(p.v(), -p.theta().sin() - params.k * p.v() + u)
}

/// Closed-loop Jacobian of the pendulum. For exogenous inputs this is `[[0, 1], [-cos θ, -k]]`.
pub fn pendulum_jacobian(p: CylinderPoint, params: &PendulumParams, t: f64) -> Mat2 {
    let (ut, uv) = params.input.partials(p.theta(), p.v(), t);
    Mat2::new(0.0, 1.0, -p.theta().cos() + ut, -params.k + uv)
}

/// `θ̇ = -sin θ + u(θ, t)`.
pub fn overdamped_field(theta: f64, input: &InputLaw, t: f64) -> f64 {
    -theta.sin() + input.eval(theta, 0.0, t)
}

/// Mechanical energy `v²/2 - cos θ`, conserved by the undamped unforced pendulum and
/// satisfying `Ė = -k v² + u θ̇` in general.
pub fn energy(p: CylinderPoint) -> f64 {
    0.5 * p.v() * p.v() - p.theta().cos()
}

/// Sample-wise increment between two trajectories on the same time grid, with the angular
/// component taken as the wrapped difference.
pub fn incremental_mismatch(traj1: &Trajectory, traj2: &Trajectory) -> Result<Vec<Tangent>> {
    if traj1.times != traj2.times {
        return Err(Error::MismatchedGrids);
    }
    Ok(traj1
        .states
        .iter()
        .zip(&traj2.states)
        .map(|(a, b)| Tangent::new(wrapped_difference(a.theta(), b.theta()), a.v() - b.v()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn field_at_equilibria_vanishes() {
        let params = PendulumParams::constant(1.0, 0.0).unwrap();
        let f = pendulum_field(CylinderPoint::new(0.0, 0.0), &params, 0.0);
        assert_eq!(f, Tangent::new(0.0, 0.0));
        let f = pendulum_field(CylinderPoint::new(PI, 0.0), &params, 0.0);
        assert_eq!(f.dtheta, 0.0);
        assert!(f.dv.abs() < 1e-15);
    }

    #[test]
    fn field_direct_substitution() {
        let params = PendulumParams::constant(2.0, 0.5).unwrap();
        let f = pendulum_field(CylinderPoint::new(PI / 2.0, 1.0), &params, 0.0);
        assert_relative_eq!(f.dtheta, 1.0);
        assert_relative_eq!(f.dv, -2.5, epsilon = 1e-15);
    }

    #[test]
    fn field_equivariant_under_full_turn() {
        let params = PendulumParams::constant(0.3, 0.8).unwrap();
        let a = pendulum_field(CylinderPoint::new(0.4 + 2.0 * PI, 1.2), &params, 0.0);
        let b = pendulum_field(CylinderPoint::new(0.4, 1.2), &params, 0.0);
        assert_relative_eq!(a.dv, b.dv, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_state_matrix() {
        let params = PendulumParams::constant(3.0, 0.0).unwrap();
        let a = pendulum_jacobian(CylinderPoint::origin(), &params, 0.0);
        assert_eq!(a, Mat2::new(0.0, 1.0, -1.0, -3.0));
        let a = pendulum_jacobian(CylinderPoint::new(PI, 0.0), &params, 0.0);
        assert_relative_eq!(a, Mat2::new(0.0, 1.0, 1.0, -3.0), epsilon = 1e-15);
        let params = PendulumParams::constant(0.0, 0.0).unwrap();
        let a = pendulum_jacobian(CylinderPoint::new(PI / 2.0, 0.0), &params, 0.0);
        assert_relative_eq!(a, Mat2::new(0.0, 1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn overdamped_examples() {
        assert_eq!(overdamped_field(0.0, &InputLaw::constant(0.0), 0.0), 0.0);
        assert_relative_eq!(overdamped_field(PI / 2.0, &InputLaw::constant(1.0), 0.0), 0.0);
        let gain = InputLaw::half_angle_gain(InputLaw::constant(1.0));
        assert_relative_eq!(overdamped_field(0.0, &gain, 0.0), 1.0);
    }

    #[test]
    fn energy_values() {
        assert_relative_eq!(energy(CylinderPoint::origin()), -1.0);
        assert_relative_eq!(energy(CylinderPoint::new(PI, 0.0)), 1.0);
        assert_relative_eq!(energy(CylinderPoint::new(PI / 2.0, 2.0)), 2.0, epsilon = 1e-15);
    }
}
