//! Mini-batch noisy projected SGD for smooth convex losses.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{check_dim, Error, Result};
use crate::loss::{Example, Loss, Smoothness};
use crate::privacy::PrivacyBudget;
use crate::rng::{phase, sample_gaussian, RngStream};
use crate::trial::RunOutput;

/// Iteration count, batch size, noise variance and step size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NsgdParams {
    pub iterations: usize,
    pub batch_size: usize,
    /// Per-coordinate variance of the Gaussian noise added to each batch gradient.
    pub noise_variance: f64,
    pub step_size: f64,
    /// Testing-only override: the noise is dropped and outputs are non-private.
    pub noise_off: bool,
}

impl NsgdParams {
    pub fn with_noise_off(mut self, off: bool) -> Self {
        self.noise_off = off;
        self
    }

    fn effective_variance(&self) -> f64 {
        if self.noise_off {
            0.0
        } else {
            self.noise_variance
        }
    }
}

pub(crate) fn check_constants(lipschitz: f64, radius: f64) -> Result<()> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidParameter(format!("Lipschitz constant must be positive, got {lipschitz}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain radius must be positive, got {radius}")));
    }
    Ok(())
}

/// `T = max(1, floor(min(n/8, eps² n² / (32 d ln(1/delta)))))`,
/// `m = clamp(floor(n sqrt(eps / (4T))), 1, n)`,
/// `sigma² = 8 T L² ln(1/delta) / (n² eps²)`, `eta = M / (L sqrt T)`.
pub fn derive_nsgd_params(
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    lipschitz: f64,
    radius: f64,
) -> Result<NsgdParams> {
    budget.validate_for(n)?;
    check_constants(lipschitz, radius)?;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let nf = n as f64;
    let eps = budget.epsilon();
    let log_term = budget.log_inv_delta();
    let raw_t = (nf / 8.0).min(eps * eps * nf * nf / (32.0 * d as f64 * log_term));
    let iterations = (raw_t.floor() as usize).max(1);
    let t = iterations as f64;
    let batch_size = ((nf * (eps / (4.0 * t)).sqrt()).floor() as usize).clamp(1, n);
    let noise_variance = 8.0 * t * lipschitz * lipschitz * log_term / (nf * nf * eps * eps);
    let step_size = radius / (lipschitz * t.sqrt());
    Ok(NsgdParams {
        iterations,
        batch_size,
        noise_variance,
        step_size,
        noise_off: false,
    })
}

/// Largest smoothness for which the excess-population-loss guarantee holds:
/// `(L/M) min(sqrt(n/2), eps n / (2 sqrt(2 d ln(1/delta))))`.
pub fn nsgd_smoothness_limit(n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> f64 {
    let nf = n as f64;
    let eps = budget.epsilon();
    let root = (2.0 * d as f64 * budget.log_inv_delta()).sqrt();
    lipschitz / radius * (nf / 2.0).sqrt().min(eps * nf / (2.0 * root))
}

/// Whether the loss is smooth enough for the utility guarantee. A `false`
/// leaves the mechanism private; only the guarantee is void.
pub fn check_nsgd_smoothness_precondition<L: Loss + ?Sized>(
    loss: &L,
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    radius: f64,
) -> Result<bool> {
    match loss.smoothness() {
        Smoothness::NonSmooth => Err(Error::NonSmoothLoss(loss.name())),
        Smoothness::Smooth(beta) => {
            Ok(beta <= nsgd_smoothness_limit(n, d, budget, loss.lipschitz(), radius))
        }
    }
}

/// Runs noisy SGD with the loss gradients.
pub fn run_nsgd<L: Loss + ?Sized>(
    loss: &L,
    data: &Dataset,
    domain: &ConvexDomain,
    params: &NsgdParams,
    w0: &DVector<f64>,
    stream: &RngStream,
) -> Result<RunOutput> {
    if let Smoothness::NonSmooth = loss.smoothness() {
        return Err(Error::NonSmoothLoss(loss.name()));
    }
    check_dim(loss.dim(), data.dim())?;
    noisy_sgd(data, domain, params, w0, stream, false, |w, z| Ok((loss.gradient(w, z)?, 1)))
}

/// The shared NSGD loop. `grad` returns a per-example (possibly approximate)
/// gradient together with the number of oracle calls it cost.
pub(crate) fn noisy_sgd<F>(
    data: &Dataset,
    domain: &ConvexDomain,
    params: &NsgdParams,
    w0: &DVector<f64>,
    stream: &RngStream,
    parallel_batch: bool,
    grad: F,
) -> Result<RunOutput>
where
    F: Fn(&DVector<f64>, &Example) -> Result<(DVector<f64>, u64)> + Sync,
{
    let d = domain.dim();
    check_dim(d, data.dim())?;
    check_dim(d, w0.len())?;
    if params.iterations == 0 || params.batch_size == 0 || params.batch_size > data.len() {
        return Err(Error::InvalidParameter(format!(
            "need T >= 1 and 1 <= m <= n, got T = {}, m = {}, n = {}",
            params.iterations,
            params.batch_size,
            data.len()
        )));
    }
    if !domain.contains(w0, 1e-12) {
        return Err(Error::Precondition("initial point lies outside the domain".into()));
    }
    let n = data.len();
    let m = params.batch_size;
    let variance = params.effective_variance();
    let batch_streams = stream.child(phase::BATCH);
    let noise_streams = stream.child(phase::NOISE);

    let mut w = w0.clone();
    let mut sum = DVector::zeros(d);
    let mut evals = 0u64;
    for t in 0..params.iterations {
        let mut rng = batch_streams.child(t as u64).rng();
        let batch: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
        let grads: Vec<(DVector<f64>, u64)> = if parallel_batch {
            batch
                .par_iter()
                .map(|&i| grad(&w, data.get(i)))
                .collect::<Result<_>>()?
        } else {
            batch.iter().map(|&i| grad(&w, data.get(i))).collect::<Result<_>>()?
        };
        let mut g = DVector::zeros(d);
        for (gi, cost) in &grads {
            g += gi;
            evals += cost;
        }
        g /= m as f64;
        g += sample_gaussian(d, variance, &noise_streams.child(t as u64))?;
        w.axpy(-params.step_size, &g, 1.0);
        domain.project_mut(&mut w);
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { iteration: t + 1 });
        }
        sum += &w;
    }
    let mut avg = sum / params.iterations as f64;
    // guard against roundoff in the average leaving the ball
    domain.project_mut(&mut avg);
    Ok(RunOutput::new(avg, evals, params.noise_off))
}
