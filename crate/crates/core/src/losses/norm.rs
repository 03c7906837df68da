use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::{Example, HessianRank, Loss, Smoothness};
use crate::smoothing::prox_exact_norm;

/// `l(w, z) = ‖w - z‖`: 1-Lipschitz and non-smooth at `w = z`.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanNorm {
    dim: usize,
}

impl EuclideanNorm {
    pub fn new(dim: usize) -> Self {
        EuclideanNorm { dim }
    }
}

impl Loss for EuclideanNorm {
    fn name(&self) -> &'static str {
        "euclidean_norm"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &DVector<f64>, z: &Example) -> f64 {
        w.metric_distance(&z.x)
    }

    fn gradient(&self, w: &DVector<f64>, z: &Example) -> Result<DVector<f64>> {
        let diff = w - &z.x;
        let norm = diff.norm();
        if norm == 0.0 {
            return Err(Error::NonDifferentiable { loss: self.name() });
        }
        Ok(diff / norm)
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::NonSmooth
    }

    fn hessian_rank_hint(&self) -> HessianRank {
        HessianRank::Unknown
    }

    /// Zero at the kink, which is the minimizing choice.
    fn subgradient(&self, w: &DVector<f64>, z: &Example) -> DVector<f64> {
        self.gradient(w, z).unwrap_or_else(|_| DVector::zeros(w.len()))
    }

    fn kink_distance(&self, w: &DVector<f64>, z: &Example) -> Option<f64> {
        Some(w.metric_distance(&z.x))
    }

    fn hessian(&self, w: &DVector<f64>, z: &Example) -> Result<DMatrix<f64>> {
        let diff = w - &z.x;
        let norm = diff.norm();
        if norm == 0.0 {
            return Err(Error::NonDifferentiable { loss: self.name() });
        }
        let u = diff / norm;
        Ok((DMatrix::identity(self.dim, self.dim) - &u * u.transpose()) / norm)
    }

    fn exact_prox(&self, w: &DVector<f64>, z: &Example, beta: f64) -> Option<DVector<f64>> {
        Some(prox_exact_norm(w, &z.x, beta))
    }

    /// Geometric median (Weiszfeld with the Vardi–Zhang fix at data points).
    fn erm_minimizer(&self, data: &Dataset, domain: &ConvexDomain) -> Option<DVector<f64>> {
        let median = geometric_median(data);
        domain.contains(&median, 1e-12).then_some(median)
    }
}

pub(crate) fn geometric_median(data: &Dataset) -> DVector<f64> {
    let points: Vec<&DVector<f64>> = data.examples().iter().map(|e| &e.x).collect();
    let mut y = data.mean_x();
    let scale = 1.0 + points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    for _ in 0..20_000 {
        let mut weighted = DVector::zeros(y.len());
        let mut weight_sum = 0.0;
        let mut pull = DVector::zeros(y.len());
        let mut coincident = 0usize;
        for p in &points {
            let dist = y.metric_distance(p);
            if dist <= 1e-14 * scale {
                coincident += 1;
                continue;
            }
            weighted.axpy(1.0 / dist, p, 1.0);
            weight_sum += 1.0 / dist;
            pull += (*p - &y) / dist;
        }
        if weight_sum == 0.0 {
            return y;
        }
        let target = weighted / weight_sum;
        let next = if coincident == 0 {
            target
        } else {
            let r = pull.norm();
            if r <= coincident as f64 {
                // y sits on a data point that is itself optimal
                return y;
            }
            let gamma = coincident as f64 / r;
            target * (1.0 - gamma) + &y * gamma
        };
        let moved = next.metric_distance(&y);
        y = next;
        if moved <= 1e-15 * scale {
            break;
        }
    }
    y
}
