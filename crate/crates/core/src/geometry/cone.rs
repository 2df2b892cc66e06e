use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CylinderPoint, Mat2, PlanarSystem, Tangent, Vec2};

/// Tolerance separating boundary rays from round-off, relative to `|δx|`.
pub const TOL_CONE: f64 = 1e-9;

type FunctionalsFn = dyn Fn(CylinderPoint) -> [Vec2; 2] + Send + Sync;

/// Polyhedral cone field `𝒦(x) = {δx : a₁(x)·δx ≥ 0, a₂(x)·δx ≥ 0}` in the plane.
#[derive(Clone)]
pub enum ConeFieldSpec {
    Constant([Vec2; 2]),
    StateDependent(Arc<FunctionalsFn>),
}

impl fmt::Debug for ConeFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeFieldSpec::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            ConeFieldSpec::StateDependent(_) => f.write_str("StateDependent(..)"),
        }
    }
}

impl ConeFieldSpec {
    /// `δθ ≥ 0`, `δθ + δv ≥ 0`.
    pub fn pendulum_default() -> Self {
        ConeFieldSpec::Constant([Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)])
    }

    pub fn constant(a1: Vec2, a2: Vec2) -> Result<Self> {
        let c = ConeFieldSpec::Constant([a1, a2]);
        c.validate_at(CylinderPoint::origin())?;
        Ok(c)
    }

    pub fn state_dependent(
        f: impl Fn(CylinderPoint) -> [Vec2; 2] + Send + Sync + 'static,
    ) -> Self {
        ConeFieldSpec::StateDependent(Arc::new(f))
    }

    pub fn functionals(&self, p: CylinderPoint) -> [Vec2; 2] {
        match self {
            ConeFieldSpec::Constant(a) => *a,
            ConeFieldSpec::StateDependent(f) => f(p),
        }
    }

    /// A two-functional cone in the plane is solid and pointed iff the functionals are
    /// linearly independent.
    pub fn validate_at(&self, p: CylinderPoint) -> Result<()> {
        let [a1, a2] = self.functionals(p);
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        if !det.is_finite() || det.abs() <= 1e-12 * a1.norm() * a2.norm() {
            return Err(Error::InvalidConfig(format!(
                "cone functionals are linearly dependent at θ = {}, v = {}",
                p.theta(),
                p.v()
            )));
        }
        Ok(())
    }

    /// Extreme rays of `𝒦(p)`: ray `i` spans the kernel of `aᵢ` and is scaled so that the other
    /// functional evaluates to one on it.
    pub fn boundary_rays(&self, p: CylinderPoint) -> [Vec2; 2] {
        let a = self.functionals(p);
        let ray = |i: usize| {
            let n = Vec2::new(-a[i][1], a[i][0]);
            n / a[1 - i].dot(&n)
        };
        [ray(0), ray(1)]
    }

    /// A direction well inside the cone: the sum of the two boundary rays.
    pub fn interior_seed(&self, p: CylinderPoint) -> Vec2 {
        let [r1, r2] = self.boundary_rays(p);
        r1 + r2
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeStatus {
    Interior,
    /// Indices of the functionals that vanish on the tangent.
    Boundary(Vec<usize>),
    Outside,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub status: ConeStatus,
    /// `minᵢ aᵢ·δx / |δx|`.
    pub margin: f64,
}

pub fn cone_membership(cone: &ConeFieldSpec, p: CylinderPoint, d: Tangent) -> Result<Membership> {
    let n = d.norm();
    if n == 0.0 {
        return Err(Error::ZeroTangent);
    }
    let a = cone.functionals(p);
    let vals = [a[0].dot(&d.to_vec()) / n, a[1].dot(&d.to_vec()) / n];
    let margin = vals[0].min(vals[1]);
    let status = if margin > TOL_CONE {
        ConeStatus::Interior
    } else if margin < -TOL_CONE {
        ConeStatus::Outside
    } else {
        ConeStatus::Boundary((0..2).filter(|&i| vals[i].abs() <= TOL_CONE).collect())
    };
    Ok(Membership { status, margin })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    Identity,
    TransversalToFlow,
}

impl Projection {
    pub fn matrix(&self, sys: &dyn PlanarSystem, p: CylinderPoint, t: f64) -> Result<Mat2> {
        match self {
            Projection::Identity => Ok(Mat2::identity()),
            Projection::TransversalToFlow => transversal_projection(sys, p, t),
        }
    }
}

/// `I - f fᵀ/|f|²`, the orthogonal projector onto the complement of the flow direction.
pub fn transversal_projection(sys: &dyn PlanarSystem, p: CylinderPoint, t: f64) -> Result<Mat2> {
    let f = sys.field(p.to_vec(), t);
    projector_off(f).ok_or(Error::EquilibriumPoint {
        theta: p.theta(),
        v: p.v(),
    })
}

pub(crate) fn projector_off(f: Vec2) -> Option<Mat2> {
    let n2 = f.norm_squared();
    (n2.sqrt() >= 1e-12).then(|| Mat2::identity() - f * f.transpose() / n2)
}
