use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::loss::{Example, HessianRank, Loss, Smoothness};

/// `l(w, z) = <w, z>` with `‖z‖ <= data_radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    dim: usize,
    data_radius: f64,
}

impl Linear {
    pub fn new(dim: usize, data_radius: f64) -> Self {
        Linear { dim, data_radius }
    }
}

impl Loss for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &DVector<f64>, z: &Example) -> f64 {
        w.dot(&z.x)
    }

    fn gradient(&self, _w: &DVector<f64>, z: &Example) -> Result<DVector<f64>> {
        Ok(z.x.clone())
    }

    fn lipschitz(&self) -> f64 {
        self.data_radius
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth(0.0)
    }

    fn hessian_rank_hint(&self) -> HessianRank {
        HessianRank::AtMost(0)
    }

    fn hessian(&self, _w: &DVector<f64>, _z: &Example) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(self.dim, self.dim))
    }
}
