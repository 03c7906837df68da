use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::{Example, HessianRank, Loss, Smoothness};

/// `l(w, z) = ½‖w - z‖²` on a ball of radius `M` with data of norm at most `r_z`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaredDistance {
    dim: usize,
    domain_radius: f64,
    data_radius: f64,
}

impl SquaredDistance {
    pub fn new(dim: usize, domain_radius: f64, data_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0 && data_radius >= 0.0) {
            return Err(Error::InvalidParameter(
                "radii must be positive (domain) and non-negative (data)".into(),
            ));
        }
        if data_radius > domain_radius {
            return Err(Error::InvalidParameter(format!(
                "data radius {data_radius} exceeds domain radius {domain_radius}"
            )));
        }
        Ok(SquaredDistance { dim, domain_radius, data_radius })
    }

    pub fn data_radius(&self) -> f64 {
        self.data_radius
    }
}

impl Loss for SquaredDistance {
    fn name(&self) -> &'static str {
        "squared_distance"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &DVector<f64>, z: &Example) -> f64 {
        0.5 * w.metric_distance(&z.x).powi(2)
    }

    fn gradient(&self, w: &DVector<f64>, z: &Example) -> Result<DVector<f64>> {
        Ok(w - &z.x)
    }

    /// `‖w - z‖ <= M + r_z <= 2M`.
    fn lipschitz(&self) -> f64 {
        2.0 * self.domain_radius
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth(1.0)
    }

    fn hessian_rank_hint(&self) -> HessianRank {
        HessianRank::AtMost(self.dim)
    }

    fn hessian(&self, _w: &DVector<f64>, _z: &Example) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim))
    }

    fn exact_prox(&self, w: &DVector<f64>, z: &Example, beta: f64) -> Option<DVector<f64>> {
        Some((&z.x + w * beta) / (1.0 + beta))
    }

    /// The projected sample mean.
    fn erm_minimizer(&self, data: &Dataset, domain: &ConvexDomain) -> Option<DVector<f64>> {
        domain.project(&data.mean_x()).ok()
    }
}
