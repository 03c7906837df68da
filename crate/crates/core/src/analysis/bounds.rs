//! Closed-form guarantees, one routine per result.

use crate::objpert::{derive_objpert_params, Variant};
use crate::privacy::PrivacyBudget;
use crate::error::Result;

/// `max(sqrt(d ln(1/delta)) / (eps n), 1/sqrt(n))`.
pub fn rate(n: usize, d: usize, budget: PrivacyBudget) -> f64 {
    let nf = n as f64;
    let private = (d as f64 * budget.log_inv_delta()).sqrt() / (budget.epsilon() * nf);
    private.max(1.0 / nf.sqrt())
}

/// Whether the privacy term is the larger branch of [`rate`].
pub fn privacy_dominates(n: usize, d: usize, budget: PrivacyBudget) -> bool {
    let nf = n as f64;
    (d as f64 * budget.log_inv_delta()).sqrt() / (budget.epsilon() * nf) >= 1.0 / nf.sqrt()
}

/// Excess population loss of noisy SGD on smooth losses: `10 M L rate`.
pub fn nsgd_population(n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> f64 {
    10.0 * radius * lipschitz * rate(n, d, budget)
}

/// Excess population loss of noisy SGD on the Moreau envelope: `24 M L rate`.
pub fn proxgd_population(n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> f64 {
    24.0 * radius * lipschitz * rate(n, d, budget)
}

/// Excess population loss of exact objective perturbation:
/// `2 M L sqrt(2/n + 4 d ln(1/delta) / (eps² n²))`.
pub fn objpert_population(n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> f64 {
    let nf = n as f64;
    let eps = budget.epsilon();
    2.0 * radius * lipschitz * (2.0 / nf + 4.0 * d as f64 * budget.log_inv_delta() / (eps * eps * nf * nf)).sqrt()
}

/// Excess population loss of approximate objective perturbation: the exact
/// bound plus `L` times the distance to the exact minimizer,
/// `sqrt(2 alpha / lambda) + E‖H‖ <= sqrt(2 alpha / lambda) + sqrt(d sigma2_out)`.
pub fn objpert_app_population(
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    lipschitz: f64,
    radius: f64,
) -> Result<f64> {
    let p = derive_objpert_params(n, d, budget, lipschitz, radius, Variant::Approximate)?;
    let drift = (2.0 * p.alpha_opt / p.lambda).sqrt() + (d as f64 * p.sigma2_out).sqrt();
    Ok(objpert_population(n, d, budget, lipschitz, radius) + lipschitz * drift)
}

/// Uniform stability of noisy SGD: `L² eta (T + 1) / n`.
pub fn nsgd_stability(lipschitz: f64, step_size: f64, iterations: usize, n: usize) -> f64 {
    lipschitz * lipschitz * step_size * (iterations as f64 + 1.0) / n as f64
}

/// Uniform stability of `lambda ‖w‖²`-regularized ERM with a `rho`-Lipschitz loss: `2 rho² / (lambda n)`.
pub fn regularized_erm_stability(rho: f64, lambda: f64, n: usize) -> f64 {
    2.0 * rho * rho / (lambda * n as f64)
}

/// Excess empirical loss of noisy SGD,
/// `M²/(2 eta T) + eta L²/2 + eta sigma² d`; pass `noise_variance = 0` for the noiseless run.
pub fn nsgd_empirical(
    radius: f64,
    lipschitz: f64,
    step_size: f64,
    iterations: usize,
    d: usize,
    noise_variance: f64,
) -> f64 {
    radius * radius / (2.0 * step_size * iterations as f64)
        + step_size * lipschitz * lipschitz / 2.0
        + step_size * noise_variance * d as f64
}
