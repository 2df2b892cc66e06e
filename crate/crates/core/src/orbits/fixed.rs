use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CylinderPoint, Mat2, PendulumParams, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    Center,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub point: CylinderPoint,
    pub eigenvalues: [Complex64; 2],
    pub classification: Classification,
}

impl FixedPoint {
    pub fn is_stable(&self) -> bool {
        matches!(
            self.classification,
            Classification::StableNode | Classification::StableFocus
        )
    }

    /// Real eigenvalues `(λ₊, λ₋)` with eigenvectors `(1, λ±)` normalized, for a saddle of the
    /// pendulum.
    pub fn saddle_directions(&self) -> Result<((f64, Vec2), (f64, Vec2))> {
        if self.classification != Classification::Saddle {
            return Err(Error::NotASaddle);
        }
        let (a, b) = (self.eigenvalues[0].re, self.eigenvalues[1].re);
        let (up, down) = if a > b { (a, b) } else { (b, a) };
        Ok((
            (up, Vec2::new(1.0, up).normalize()),
            (down, Vec2::new(1.0, down).normalize()),
        ))
    }
}

const CLASSIFY_TOL: f64 = 1e-12;

/// Eigenvalues and trace/determinant classification of a planar linearization.
pub fn classify(j: &Mat2) -> ([Complex64; 2], Classification) {
    let tr = j.trace();
    let det = j.determinant();
    let disc = tr * tr - 4.0 * det;
    let eig = if disc >= 0.0 {
        let s = disc.sqrt();
        // larger-magnitude root first, the other from the product to avoid cancellation
        let sign = if tr >= 0.0 { 1.0 } else { -1.0 };
        let big = 0.5 * (tr + sign * s);
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(0.5 * tr, 0.5 * s), Complex64::new(0.5 * tr, -0.5 * s)]
    };
    let class = if det.abs() <= CLASSIFY_TOL {
        Classification::Degenerate
    } else if det < 0.0 {
        Classification::Saddle
    } else if tr.abs() <= CLASSIFY_TOL {
        Classification::Center
    } else if tr < 0.0 {
        if disc >= 0.0 {
            Classification::StableNode
        } else {
            Classification::StableFocus
        }
    } else if disc >= 0.0 {
        Classification::UnstableNode
    } else {
        Classification::UnstableFocus
    };
    (eig, class)
}

fn fixed_point(theta: f64, k: f64) -> FixedPoint {
    let j = Mat2::new(0.0, 1.0, -theta.cos(), -k);
    let (eigenvalues, classification) = classify(&j);
    FixedPoint {
        point: CylinderPoint::new(theta, 0.0),
        eigenvalues,
        classification,
    }
}

/// Equilibria of the pendulum under a constant torque: `sin θ = u`, `v = 0`.
pub fn find_fixed_points(params: &PendulumParams) -> Result<Vec<FixedPoint>> {
    params.validate()?;
    let u = params.input.constant_value().ok_or_else(|| {
        Error::InvalidConfig("fixed points are computed for constant torque only".into())
    })?;
    let k = params.k;
    if (u.abs() - 1.0).abs() <= CLASSIFY_TOL {
        let mut fp = fixed_point(u.signum() * FRAC_PI_2, k);
        // cos(π/2) is not exactly zero in floating point
        fp.classification = Classification::Degenerate;
        return Ok(vec![fp]);
    }
    if u.abs() > 1.0 {
        return Ok(Vec::new());
    }
    let low = u.asin();
    Ok(vec![fixed_point(low, k), fixed_point(PI - low, k)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn large_damping_fixed_points() {
        let fps = find_fixed_points(&PendulumParams::constant(3.0, 0.0).unwrap()).unwrap();
        assert_eq!(fps.len(), 2);
        assert_eq!(fps[0].classification, Classification::StableNode);
        assert_relative_eq!(fps[0].eigenvalues[0].re, (-3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(fps[0].eigenvalues[1].re, -2.618034, epsilon = 1e-6);
        assert_eq!(fps[1].classification, Classification::Saddle);
        assert_relative_eq!(fps[1].eigenvalues[0].re, 0.302776, epsilon = 1e-6);
        assert_relative_eq!(fps[1].eigenvalues[1].re, (-3.0 - 13f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(fps[1].point.theta().abs(), PI);
    }

    #[test]
    fn saddle_node_and_no_equilibria() {
        let fps = find_fixed_points(&PendulumParams::constant(0.7, 1.0).unwrap()).unwrap();
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].classification, Classification::Degenerate);
        assert_relative_eq!(fps[0].point.theta(), FRAC_PI_2);
        assert!(find_fixed_points(&PendulumParams::constant(0.7, 1.5).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn characteristic_polynomial_residual() {
        for (k, u) in [(3.0, 0.0), (0.5, 0.3), (0.1, -0.9), (2.0, 0.99), (0.0, 0.0)] {
            for fp in find_fixed_points(&PendulumParams::constant(k, u).unwrap()).unwrap() {
                let c = fp.point.theta().cos();
                for l in fp.eigenvalues {
                    let r = l * l + k * l + c;
                    assert!(r.norm() <= 1e-10, "k={k} u={u} λ={l}");
                }
                assert!(fp.point.theta().sin() - u < 1e-12);
            }
        }
    }

    #[test]
    fn undamped_bottom_is_a_center() {
        let fps = find_fixed_points(&PendulumParams::constant(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(fps[0].classification, Classification::Center);
        assert_eq!(fps[1].classification, Classification::Saddle);
    }

    #[test]
    fn classification_follows_trace_determinant_rule() {
        let cases = [
            (Mat2::new(-1.0, 0.0, 0.0, -2.0), Classification::StableNode),
            (Mat2::new(-1.0, 2.0, -2.0, -1.0), Classification::StableFocus),
            (Mat2::new(1.0, 0.0, 0.0, -2.0), Classification::Saddle),
            (Mat2::new(1.0, 0.0, 0.0, 2.0), Classification::UnstableNode),
            (Mat2::new(1.0, 2.0, -2.0, 1.0), Classification::UnstableFocus),
            (Mat2::new(0.0, 1.0, -1.0, 0.0), Classification::Center),
            (Mat2::new(0.0, 1.0, 0.0, -1.0), Classification::Degenerate),
        ];
        for (m, c) in cases {
            assert_eq!(classify(&m).1, c, "{m}");
        }
    }
}
