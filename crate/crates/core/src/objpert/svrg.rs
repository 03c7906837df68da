use nalgebra::DVector;
use rand::Rng;

use crate::domain::ConvexDomain;
use crate::erm::strong_convexity_gap;
use crate::error::{check_dim, Error, Result};
use crate::rng::RngStream;

/// `F(w) = (1/n) sum_i f_i(w)` with per-component gradients.
pub trait FiniteSum {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    fn value(&self, w: &DVector<f64>) -> f64;

    fn component_gradient(&self, i: usize, w: &DVector<f64>) -> Result<DVector<f64>>;

    fn full_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(w.len());
        for i in 0..self.len() {
            g += self.component_gradient(i, w)?;
        }
        Ok(g / self.len() as f64)
    }
}

/// `k = ceil(20 beta / lambda)`.
pub fn default_epoch_length(smoothness: f64, strong_convexity: f64) -> usize {
    ((20.0 * smoothness / strong_convexity).ceil() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrgConfig {
    /// Component smoothness `beta`; the inner step is `1/(10 beta)`.
    pub smoothness: f64,
    /// Strong convexity used for the epoch length.
    pub strong_convexity: f64,
    pub epoch_length: usize,
    /// Modulus used by the optimality certificate; must be a valid strong
    /// convexity constant of `F`.
    pub certificate_modulus: f64,
}

impl SvrgConfig {
    pub fn new(smoothness: f64, strong_convexity: f64) -> Result<Self> {
        if !(smoothness > 0.0 && strong_convexity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "svrg needs positive smoothness and strong convexity, got {smoothness} and {strong_convexity}"
            )));
        }
        Ok(SvrgConfig {
            smoothness,
            strong_convexity,
            epoch_length: default_epoch_length(smoothness, strong_convexity),
            certificate_modulus: strong_convexity,
        })
    }

    pub fn step(&self) -> f64 {
        1.0 / (10.0 * self.smoothness)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SvrgStop {
    /// Run exactly this many epochs.
    Epochs(usize),
    /// Run until the certified gap is at most `tol`.
    Certified { tol: f64, max_epochs: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrgOutput {
    pub w: DVector<f64>,
    pub epochs: usize,
    /// Component-gradient evaluations, full passes included.
    pub grad_evals: u64,
    /// Certified gap at each anchor `y^(1), y^(2), ...`.
    pub gaps: Vec<f64>,
}

/// Epoch-anchored SVRG with projected inner steps; each epoch's average of
/// `w_1..w_k` becomes the next anchor.
pub fn svrg<F: FiniteSum + ?Sized>(
    objective: &F,
    domain: &ConvexDomain,
    config: &SvrgConfig,
    start: &DVector<f64>,
    stop: SvrgStop,
    stream: &RngStream,
) -> Result<SvrgOutput> {
    check_dim(domain.dim(), objective.dim())?;
    let n = objective.len();
    let k = config.epoch_length.max(1);
    let step = config.step();
    let mut y = domain.project(start)?;
    let mut anchor_grad = objective.full_gradient(&y)?;
    let mut evals = n as u64;
    let mut gaps = vec![strong_convexity_gap(domain, &y, &anchor_grad, config.certificate_modulus)];
    let mut epoch = 0;
    loop {
        let gap = *gaps.last().expect("non-empty");
        match stop {
            SvrgStop::Epochs(t) if epoch >= t => break,
            SvrgStop::Certified { tol, .. } if gap <= tol => break,
            SvrgStop::Certified { tol, max_epochs } if epoch >= max_epochs => {
                return Err(Error::ToleranceNotReached { achieved: gap, target: tol, iterations: epoch });
            }
            _ => {}
        }
        let mut rng = stream.child(epoch as u64).rng();
        let mut w = y.clone();
        let mut sum = w.clone();
        for s in 1..k {
            let i = rng.random_range(0..n);
            let mut v = objective.component_gradient(i, &w)?;
            v -= objective.component_gradient(i, &y)?;
            v += &anchor_grad;
            evals += 2;
            w.axpy(-step, &v, 1.0);
            domain.project_mut(&mut w);
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { iteration: epoch * k + s });
            }
            sum += &w;
        }
        y = sum / k as f64;
        domain.project_mut(&mut y);
        anchor_grad = objective.full_gradient(&y)?;
        evals += n as u64;
        gaps.push(strong_convexity_gap(domain, &y, &anchor_grad, config.certificate_modulus));
        epoch += 1;
    }
    Ok(SvrgOutput { w: y, epochs: epoch, grad_evals: evals, gaps })
}
