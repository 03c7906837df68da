//! Objective perturbation: exact (minimize the perturbed objective) and
//! approximate (SVRG to a fixed accuracy, then Gaussian output noise).

mod run;
mod svrg;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::loss::{Example, HessianRank, Loss, Smoothness};
use crate::nsgd::check_constants;
use crate::privacy::PrivacyBudget;

pub use run::{minimize_perturbed, run_objpert_app, run_objpert_exact, ObjPertOptions};
pub use svrg::{default_epoch_length, svrg, FiniteSum, SvrgConfig, SvrgOutput, SvrgStop};

/// Which objective-perturbation mechanism the parameters are for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Approximate,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exact => "exact",
            Variant::Approximate => "approximate",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Variant::Exact),
            "approximate" | "app" => Ok(Variant::Approximate),
            other => Err(Error::InvalidParameter(format!("unknown objective perturbation variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjPertParams {
    pub variant: Variant,
    /// Regularization weight on `‖w‖²` (not normalized by `n`).
    pub lambda: f64,
    /// Per-coordinate variance of the linear perturbation `G`.
    pub sigma2_obj: f64,
    /// Optimization accuracy required of the approximate minimizer.
    pub alpha_opt: f64,
    /// Per-coordinate variance of the output noise `H` (approximate variant).
    pub sigma2_out: f64,
}

/// `lambda = (2L/M) sqrt(2/n + 4 d ln(1/delta) / (eps² n²))`,
/// `sigma2_obj = c L² ln(1/delta) / eps²` with `c = 10` (exact) or `20` (approximate),
/// `alpha = M² lambda / n²`, `sigma2_out = 40 alpha ln(1/delta) / (lambda eps²)`.
pub fn derive_objpert_params(
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    lipschitz: f64,
    radius: f64,
    variant: Variant,
) -> Result<ObjPertParams> {
    budget.validate_for(n)?;
    check_constants(lipschitz, radius)?;
    let nf = n as f64;
    let eps2 = budget.epsilon() * budget.epsilon();
    let log_term = budget.log_inv_delta();
    let lambda = 2.0 * lipschitz / radius * (2.0 / nf + 4.0 * d as f64 * log_term / (eps2 * nf * nf)).sqrt();
    let c = match variant {
        Variant::Exact => 10.0,
        Variant::Approximate => 20.0,
    };
    let alpha_opt = radius * radius * lambda / (nf * nf);
    Ok(ObjPertParams {
        variant,
        lambda,
        sigma2_obj: c * lipschitz * lipschitz * log_term / eps2,
        alpha_opt,
        sigma2_out: 40.0 * alpha_opt * log_term / (lambda * eps2),
    })
}

/// Outcome of the privacy precondition audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreconditionReport {
    /// `beta <= eps n lambda` (inclusive).
    pub smoothness_ok: bool,
    /// Hessian rank hint is at most one.
    pub rank_ok: bool,
    /// Sampled determinant condition; `false` when no pairs were audited.
    pub det_condition_ok: bool,
    pub certified: bool,
}

pub fn check_objpert_preconditions<L: Loss + ?Sized>(
    loss: &L,
    n: usize,
    epsilon: f64,
    lambda: f64,
    audit_pairs: &[(DVector<f64>, Example)],
) -> Result<PreconditionReport> {
    let beta = match loss.smoothness() {
        Smoothness::Smooth(beta) => beta,
        Smoothness::NonSmooth => return Err(Error::NonSmoothLoss(loss.name())),
    };
    let smoothness_ok = beta <= epsilon * n as f64 * lambda;
    let rank_ok = matches!(loss.hessian_rank_hint(), HessianRank::AtMost(r) if r <= 1);
    let det_condition_ok =
        !audit_pairs.is_empty() && hessian_det_condition_check(loss, lambda, epsilon, audit_pairs)?;
    Ok(PreconditionReport {
        smoothness_ok,
        rank_ok,
        det_condition_ok,
        certified: smoothness_ok && (rank_ok || det_condition_ok),
    })
}

/// `|det(I + H/lambda)|` for the loss Hessian `H` at `(w, z)`.
pub fn hessian_determinant<L: Loss + ?Sized>(
    loss: &L,
    lambda: f64,
    w: &DVector<f64>,
    z: &Example,
) -> Result<f64> {
    let h = loss.hessian(w, z)?;
    let d = h.nrows();
    Ok((DMatrix::identity(d, d) + h / lambda).determinant().abs())
}

/// Whether `|det(I + H(w, z)/lambda)| <= e^{eps/2}` at every audited pair.
pub fn hessian_det_condition_check<L: Loss + ?Sized>(
    loss: &L,
    lambda: f64,
    epsilon: f64,
    pairs: &[(DVector<f64>, Example)],
) -> Result<bool> {
    let limit = (epsilon / 2.0).exp();
    for (w, z) in pairs {
        if hessian_determinant(loss, lambda, w, z)? > limit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `J(w) = L̂(w; S) + <G, w>/n + lambda ‖w‖²`.
#[derive(Clone, Copy, Debug)]
pub struct PerturbedObjective<'a> {
    pub loss: &'a dyn Loss,
    pub data: &'a Dataset,
    pub noise: &'a DVector<f64>,
    pub lambda: f64,
}

impl<'a> PerturbedObjective<'a> {
    pub fn new(loss: &'a dyn Loss, data: &'a Dataset, noise: &'a DVector<f64>, lambda: f64) -> Result<Self> {
        check_dim(loss.dim(), data.dim())?;
        check_dim(loss.dim(), noise.len())?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(PerturbedObjective { loss, data, noise, lambda })
    }

    fn n(&self) -> f64 {
        self.data.len() as f64
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        let emp: f64 = self.data.examples().iter().map(|z| self.loss.value(w, z)).sum::<f64>() / self.n();
        emp + self.noise.dot(w) / self.n() + self.lambda * w.norm_squared()
    }

    /// `∇L̂(w; S) + G/n + 2 lambda w`.
    pub fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(w.len());
        for z in self.data.examples() {
            g += self.loss.gradient(w, z)?;
        }
        g /= self.n();
        g += self.noise / self.n();
        g.axpy(2.0 * self.lambda, w, 1.0);
        Ok(g)
    }

    pub fn value_and_grad(&self, w: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        Ok((self.value(w), self.gradient(w)?))
    }

    /// Smoothness of every component, `beta + 2 lambda`.
    pub fn smoothness(&self) -> Result<f64> {
        match self.loss.smoothness() {
            Smoothness::Smooth(beta) => Ok(beta + 2.0 * self.lambda),
            Smoothness::NonSmooth => Err(Error::NonSmoothLoss(self.loss.name())),
        }
    }

    /// Strong convexity modulus of `lambda ‖w‖²`, which is `2 lambda`.
    pub fn strong_convexity(&self) -> f64 {
        2.0 * self.lambda
    }
}

impl FiniteSum for PerturbedObjective<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        PerturbedObjective::value(self, w)
    }

    /// `∇l(w, z_i) + G/n + 2 lambda w`.
    fn component_gradient(&self, i: usize, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut g = self.loss.gradient(w, self.data.get(i))?;
        g.axpy(1.0 / self.n(), self.noise, 1.0);
        g.axpy(2.0 * self.lambda, w, 1.0);
        Ok(g)
    }

    fn full_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        self.gradient(w)
    }
}

#[cfg(test)]
mod tests;
