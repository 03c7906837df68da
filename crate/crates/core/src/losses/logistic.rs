use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::loss::{Example, HessianRank, Loss, Smoothness};

/// Logistic loss `ln(1 + exp(-y <w, x>))` for labels `y ∈ {-1, +1}` and
/// features of norm at most `feature_radius`.
///
/// The Hessian `s(1-s) x xᵀ` has rank one everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticGlm {
    dim: usize,
    feature_radius: f64,
}

impl LogisticGlm {
    pub fn new(dim: usize, feature_radius: f64) -> Result<Self> {
        if !(feature_radius > 0.0 && feature_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "feature radius must be positive, got {feature_radius}"
            )));
        }
        Ok(LogisticGlm { dim, feature_radius })
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl Loss for LogisticGlm {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &DVector<f64>, z: &Example) -> f64 {
        softplus(-z.y * w.dot(&z.x))
    }

    fn gradient(&self, w: &DVector<f64>, z: &Example) -> Result<DVector<f64>> {
        let s = sigmoid(-z.y * w.dot(&z.x));
        Ok(&z.x * (-z.y * s))
    }

    fn lipschitz(&self) -> f64 {
        self.feature_radius
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth(0.25 * self.feature_radius * self.feature_radius)
    }

    fn hessian_rank_hint(&self) -> HessianRank {
        HessianRank::AtMost(1)
    }

    fn hessian(&self, w: &DVector<f64>, z: &Example) -> Result<DMatrix<f64>> {
        let s = sigmoid(w.dot(&z.x));
        Ok(&z.x * z.x.transpose() * (s * (1.0 - s)))
    }
}
