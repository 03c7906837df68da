use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::{EuclideanNorm, LogisticGlm, SquaredDistance};
use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::{Example, Loss};
use crate::losses::logistic::sigmoid;
use crate::rng::{uniform_ball, unit_sphere, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    /// `z = μ + u`, `u` uniform in a ball; paired with the squared distance.
    BallUniformMeanEstimation,
    /// `z = μ + ρ u`, `u` uniform on the unit sphere; paired with the norm loss.
    SpherePointsNormLoss,
    /// `x` uniform in a ball, `P(y = 1 | x) = s(<w*, x>)`; paired with the
    /// logistic loss.
    LogisticPairs,
}

impl DistributionKind {
    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::BallUniformMeanEstimation => "ball_uniform_mean_estimation",
            DistributionKind::SpherePointsNormLoss => "sphere_points_norm_loss",
            DistributionKind::LogisticPairs => "logistic_pairs",
        }
    }

    /// Name of the loss this distribution has a population oracle for.
    pub fn paired_loss(self) -> &'static str {
        match self {
            DistributionKind::BallUniformMeanEstimation => "squared_distance",
            DistributionKind::SpherePointsNormLoss => "euclidean_norm",
            DistributionKind::LogisticPairs => "logistic",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball_uniform_mean_estimation" | "mean_estimation" => {
                Ok(DistributionKind::BallUniformMeanEstimation)
            }
            "sphere_points_norm_loss" | "norm_loss" => Ok(DistributionKind::SpherePointsNormLoss),
            "logistic_pairs" | "logistic" => Ok(DistributionKind::LogisticPairs),
            other => Err(Error::InvalidParameter(format!("unknown distribution `{other}`"))),
        }
    }
}

/// A synthetic data distribution with a known population minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDistribution {
    kind: DistributionKind,
    /// μ for the point distributions, w* for logistic pairs.
    center: DVector<f64>,
    /// Radius of the ball/sphere around μ, or the feature radius.
    spread: f64,
    data_radius: f64,
}

impl SyntheticDistribution {
    pub fn ball_uniform_mean_estimation(mean: DVector<f64>, data_radius: f64) -> Result<Self> {
        let spread = data_radius - mean.norm();
        if !(spread > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean norm {} must be below the data radius {data_radius}",
                mean.norm()
            )));
        }
        Ok(SyntheticDistribution {
            kind: DistributionKind::BallUniformMeanEstimation,
            center: mean,
            spread,
            data_radius,
        })
    }

    pub fn sphere_points_norm_loss(mean: DVector<f64>, data_radius: f64) -> Result<Self> {
        let spread = data_radius - mean.norm();
        if !(spread > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean norm {} must be below the data radius {data_radius}",
                mean.norm()
            )));
        }
        if mean.len() < 2 {
            return Err(Error::InvalidParameter(
                "sphere points need d >= 2 for a unique median".into(),
            ));
        }
        Ok(SyntheticDistribution {
            kind: DistributionKind::SpherePointsNormLoss,
            center: mean,
            spread,
            data_radius,
        })
    }

    /// Well-specified logistic model with true parameter `w_star`.
    pub fn logistic_pairs(w_star: DVector<f64>, feature_radius: f64) -> Result<Self> {
        if !(feature_radius > 0.0) {
            return Err(Error::InvalidParameter("feature radius must be positive".into()));
        }
        Ok(SyntheticDistribution {
            kind: DistributionKind::LogisticPairs,
            center: w_star,
            spread: feature_radius,
            data_radius: feature_radius,
        })
    }

    /// Builds a distribution from a name and a scalar location parameter
    /// (`‖μ‖` or `‖w*‖`, placed along the first axis).
    pub fn from_name(
        kind: DistributionKind,
        dim: usize,
        location_norm: f64,
        data_radius: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut loc = DVector::zeros(dim);
        loc[0] = location_norm;
        match kind {
            DistributionKind::BallUniformMeanEstimation => {
                Self::ball_uniform_mean_estimation(loc, data_radius)
            }
            DistributionKind::SpherePointsNormLoss => Self::sphere_points_norm_loss(loc, data_radius),
            DistributionKind::LogisticPairs => Self::logistic_pairs(loc, data_radius),
        }
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Bound on `‖z‖` (or `‖x‖` for labeled pairs).
    pub fn data_radius(&self) -> f64 {
        self.data_radius
    }

    pub fn population_minimizer(&self) -> &DVector<f64> {
        &self.center
    }

    /// `min_w L(w; D)` when available in closed form.
    pub fn population_min_loss(&self) -> Option<f64> {
        match self.kind {
            DistributionKind::BallUniformMeanEstimation => {
                let d = self.dim() as f64;
                Some(0.5 * self.spread * self.spread * d / (d + 2.0))
            }
            _ => None,
        }
    }

    /// The loss whose population oracle this distribution provides.
    pub fn natural_loss(&self, domain_radius: f64) -> Result<Arc<dyn Loss>> {
        Ok(match self.kind {
            DistributionKind::BallUniformMeanEstimation => {
                Arc::new(SquaredDistance::new(self.dim(), domain_radius, self.data_radius)?)
            }
            DistributionKind::SpherePointsNormLoss => Arc::new(EuclideanNorm::new(self.dim())),
            DistributionKind::LogisticPairs => {
                Arc::new(LogisticGlm::new(self.dim(), self.data_radius)?)
            }
        })
    }

    pub fn pairs_with(&self, loss: &dyn Loss) -> bool {
        loss.name() == self.kind.paired_loss() && loss.dim() == self.dim()
    }

    /// Checks that the population minimizer lies in `domain`.
    pub fn check_domain(&self, domain: &ConvexDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: self.dim(),
            });
        }
        if !domain.contains(&self.center, 0.0) {
            return Err(Error::InvalidParameter(format!(
                "population minimizer of `{}` lies outside the domain",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn sample_example<R: Rng + ?Sized>(&self, rng: &mut R) -> Example {
        let d = self.dim();
        match self.kind {
            DistributionKind::BallUniformMeanEstimation => {
                Example::point(&self.center + uniform_ball(d, self.spread, rng))
            }
            DistributionKind::SpherePointsNormLoss => {
                Example::point(&self.center + unit_sphere(d, rng) * self.spread)
            }
            DistributionKind::LogisticPairs => {
                let x = uniform_ball(d, self.spread, rng);
                let p = sigmoid(self.center.dot(&x));
                let y = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
                Example::labeled(x, y)
            }
        }
    }

    /// Draws `z` and returns the label-marginalized terms `(weight, example)`
    /// whose weighted loss has expectation `L(w; D)`.
    pub(crate) fn sample_conditional<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(f64, Example)> {
        match self.kind {
            DistributionKind::LogisticPairs => {
                let x = uniform_ball(self.dim(), self.spread, rng);
                let p = sigmoid(self.center.dot(&x));
                vec![
                    (p, Example::labeled(x.clone(), 1.0)),
                    (1.0 - p, Example::labeled(x, -1.0)),
                ]
            }
            _ => vec![(1.0, self.sample_example(rng))],
        }
    }

    /// An i.i.d. sample of size `n`.
    pub fn sample(&self, n: usize, stream: &RngStream) -> Result<Dataset> {
        let mut rng = stream.rng();
        Dataset::new((0..n).map(|_| self.sample_example(&mut rng)).collect())
    }
}
