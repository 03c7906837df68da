//! Synthetic loss families, data distributions and their population oracles.

mod distribution;
mod linear;
pub(crate) mod logistic;
mod norm;
mod population;
mod squared;

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

pub use distribution::{DistributionKind, SyntheticDistribution};
pub use linear::Linear;
pub use logistic::LogisticGlm;
pub use norm::EuclideanNorm;
pub use population::{
    empirical_loss, excess_population_loss, population_loss, Estimate, PopulationMode,
    DEFAULT_MC_SAMPLES,
};
pub use squared::SquaredDistance;

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::{finite_diff_grad_check, Loss, Smoothness};
use crate::rng::{uniform_ball, RngStream};

/// `½‖w - z‖²` with certified `L = 2M`, `beta = 1`.
pub fn squared_distance_loss(dim: usize, domain_radius: f64, data_radius: f64) -> Result<SquaredDistance> {
    SquaredDistance::new(dim, domain_radius, data_radius)
}

/// `‖w - z‖` with `L = 1`, non-smooth.
pub fn euclidean_norm_loss(dim: usize) -> EuclideanNorm {
    EuclideanNorm::new(dim)
}

/// Logistic loss for unit-norm features: `L = 1`, `beta = 1/4`, rank-1 Hessian.
pub fn logistic_glm_loss(dim: usize) -> LogisticGlm {
    LogisticGlm::new(dim, 1.0).expect("unit feature radius is valid")
}

/// A loss whose certified constants passed the sampling audit.
#[derive(Clone, Debug)]
pub struct RegisteredLoss {
    pub name: String,
    /// How the certified constants were obtained.
    pub derivation: String,
    pub loss: Arc<dyn Loss>,
}

/// Number of interior points for the finite-difference audit.
pub const GRADIENT_CHECK_POINTS: usize = 100;
/// Number of points for the Lipschitz audit.
pub const LIPSCHITZ_CHECK_POINTS: usize = 1000;

impl RegisteredLoss {
    /// Audits `loss` on random `(w, z)` with `w` in `domain` and `z ~ dist`:
    /// finite differences within 1e-5 at 100 points, `‖∇l‖ <= L (1 + 1e-9)` at
    /// 1000 points, and (for smooth losses) the gradient-Lipschitz ratio.
    pub fn register(
        loss: Arc<dyn Loss>,
        derivation: impl Into<String>,
        domain: &ConvexDomain,
        dist: &SyntheticDistribution,
        stream: &RngStream,
    ) -> Result<Self> {
        let fail = |detail: String| Error::Certification { loss: loss.name(), detail };
        let mut rng = stream.rng();
        let h = 1e-5;
        let radius = domain.radius();
        let mut checked = 0;
        let mut attempts = 0;
        while checked < GRADIENT_CHECK_POINTS {
            attempts += 1;
            if attempts > 100 * GRADIENT_CHECK_POINTS {
                return Err(fail("could not find differentiable interior points".into()));
            }
            let w = domain.center() + uniform_ball(domain.dim(), radius - 2.0 * h, &mut rng);
            let z = dist.sample_example(&mut rng);
            if loss.kink_distance(&w, &z).is_some_and(|d| d < 1e-2) {
                continue;
            }
            let err = finite_diff_grad_check(loss.as_ref(), &w, &z, h)?;
            if err > 1e-5 {
                return Err(fail(format!("finite-difference error {err:e} > 1e-5")));
            }
            checked += 1;
        }

        let mut worst_grad = 0.0f64;
        let mut worst_smooth = 0.0f64;
        let beta = loss.smoothness().beta();
        for _ in 0..LIPSCHITZ_CHECK_POINTS {
            let w = sample_domain(domain, &mut rng);
            let z = dist.sample_example(&mut rng);
            if loss.kink_distance(&w, &z) != Some(0.0) {
                worst_grad = worst_grad.max(loss.gradient(&w, &z)?.norm());
            }
            if let Some(beta) = beta {
                let u = sample_domain(domain, &mut rng);
                let diff = (loss.gradient(&w, &z)? - loss.gradient(&u, &z)?).norm();
                let dist_wu = (&w - &u).norm();
                if dist_wu > 0.0 {
                    worst_smooth = worst_smooth.max(diff - beta * dist_wu);
                }
            }
        }
        if worst_grad > loss.lipschitz() * (1.0 + 1e-9) {
            return Err(fail(format!(
                "gradient norm {worst_grad} exceeds certified L = {}",
                loss.lipschitz()
            )));
        }
        if worst_smooth > 1e-9 {
            return Err(fail(format!(
                "gradient difference exceeds certified beta = {} by {worst_smooth:e}",
                loss.smoothness()
            )));
        }
        Ok(RegisteredLoss {
            name: loss.name().to_string(),
            derivation: derivation.into(),
            loss,
        })
    }

    /// Registers the loss paired with `dist`, with its standard derivation note.
    pub fn for_distribution(
        dist: &SyntheticDistribution,
        domain: &ConvexDomain,
        stream: &RngStream,
    ) -> Result<Self> {
        let loss = dist.natural_loss(domain.radius())?;
        let note = match (loss.name(), loss.smoothness()) {
            ("squared_distance", _) => "L = 2M since ‖w - z‖ <= M + r_z <= 2M; beta = 1 (Hessian I)",
            ("euclidean_norm", _) => "L = 1 (unit-norm gradient away from the kink); non-smooth at w = z",
            ("logistic", _) => "L = r_x since |s| <= 1; beta = r_x²/4 since s(1-s) <= 1/4; Hessian s(1-s)xxᵀ has rank 1",
            (_, Smoothness::NonSmooth) => "certified non-smooth loss",
            _ => "certified smooth loss",
        };
        Self::register(loss, note, domain, dist, stream)
    }
}

fn sample_domain<R: Rng + ?Sized>(domain: &ConvexDomain, rng: &mut R) -> DVector<f64> {
    domain.center() + uniform_ball(domain.dim(), domain.radius(), rng)
}
