//! Feasible sets with exact Euclidean projection.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// A bounded convex feasible set.
///
/// Only the Euclidean ball is provided; every bound in this crate depends on
/// the set solely through its L2 radius.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexDomain {
    L2Ball { center: DVector<f64>, radius: f64 },
}

impl ConvexDomain {
    pub fn l2_ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("ball center must be finite".into()));
        }
        Ok(ConvexDomain::L2Ball { center, radius })
    }

    /// Ball of radius `radius` around the origin of `R^dim`.
    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::l2_ball(DVector::zeros(dim), radius)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::L2Ball { center, .. } => center.len(),
        }
    }

    /// The radius `M` that enters every parameter formula.
    pub fn radius(&self) -> f64 {
        match self {
            ConvexDomain::L2Ball { radius, .. } => *radius,
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        match self {
            ConvexDomain::L2Ball { center, .. } => center,
        }
    }

    pub fn contains(&self, w: &DVector<f64>, slack: f64) -> bool {
        match self {
            ConvexDomain::L2Ball { center, radius } => {
                w.len() == center.len() && (w - center).norm() <= radius + slack
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), w.len())?;
        let mut out = w.clone();
        self.project_mut(&mut out);
        Ok(out)
    }

    /// In-place projection; the caller guarantees matching dimensions.
    pub(crate) fn project_mut(&self, w: &mut DVector<f64>) {
        match self {
            ConvexDomain::L2Ball { center, radius } => {
                let dist = w.metric_distance(center);
                if dist > *radius {
                    let scale = radius / dist;
                    for (wi, ci) in w.iter_mut().zip(center.iter()) {
                        *wi = ci + (*wi - ci) * scale;
                    }
                }
            }
        }
    }

    /// `min_{v in set} <g, v>`, the linear minimization oracle value.
    pub(crate) fn min_linear(&self, g: &DVector<f64>) -> f64 {
        match self {
            ConvexDomain::L2Ball { center, radius } => g.dot(center) - radius * g.norm(),
        }
    }
}
