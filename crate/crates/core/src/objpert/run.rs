use nalgebra::DVector;

use super::svrg::{svrg, SvrgConfig, SvrgStop};
use super::{check_objpert_preconditions, ObjPertParams, PerturbedObjective, Variant};
use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::erm::{minimize_smooth, Minimized};
use crate::error::{check_dim, Error, Result};
use crate::loss::{Example, Loss};
use crate::rng::{phase, sample_gaussian, uniform_ball, RngStream};
use crate::trial::RunOutput;

/// Pairs sampled for the determinant audit.
const DET_AUDIT_PAIRS: usize = 20;
const MAX_SOLVER_ITERS: usize = 200_000;
const MAX_SVRG_EPOCHS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ObjPertOptions {
    /// Testing-only: drop both the objective and the output noise.
    pub noise_off: bool,
    /// Solver accuracy for the exact variant; defaults to `alpha_opt * 1e-3`
    /// and may only be tightened.
    pub tol: Option<f64>,
    /// Also solve to `alpha_opt * 1e-4` and record `‖w_2 - w_1_ref‖`.
    pub sensitivity_audit: bool,
}

/// Minimizes `J` over the domain by projected gradient descent with step
/// `1/(beta + 2 lambda)`, stopping at a certified gap of `tol`.
pub fn minimize_perturbed(
    objective: &PerturbedObjective<'_>,
    domain: &ConvexDomain,
    start: &DVector<f64>,
    tol: f64,
) -> Result<Minimized> {
    minimize_smooth(
        |w| objective.gradient(w),
        domain,
        start,
        objective.smoothness()?,
        objective.strong_convexity(),
        tol,
        MAX_SOLVER_ITERS,
    )
}

fn audit_pairs(data: &Dataset, domain: &ConvexDomain, stream: &RngStream) -> Vec<(DVector<f64>, Example)> {
    let mut rng = stream.rng();
    (0..DET_AUDIT_PAIRS.min(data.len()))
        .map(|i| {
            let w = domain.center() + uniform_ball(domain.dim(), domain.radius(), &mut rng);
            (w, data.get(i).clone())
        })
        .collect()
}

fn perturbation(dim: usize, variance: f64, noise_off: bool, stream: &RngStream) -> Result<DVector<f64>> {
    sample_gaussian(dim, if noise_off { 0.0 } else { variance }, stream)
}

fn certify(out: RunOutput, loss: &dyn Loss, data: &Dataset, domain: &ConvexDomain, params: &ObjPertParams, epsilon: f64, stream: &RngStream) -> Result<RunOutput> {
    let pairs = audit_pairs(data, domain, &stream.child(phase::PROBE));
    let report = check_objpert_preconditions(loss, data.len(), epsilon, params.lambda, &pairs)?;
    if report.certified {
        return Ok(out);
    }
    let why = if !report.smoothness_ok {
        "smoothness exceeds eps * n * lambda; privacy is not certified"
    } else {
        "Hessian rank exceeds one and the determinant audit failed; privacy is not certified"
    };
    Ok(out.uncertified(why))
}

/// Samples `G`, then minimizes `J` to `tol` (default `alpha_opt * 1e-3`).
pub fn run_objpert_exact(
    loss: &dyn Loss,
    data: &Dataset,
    domain: &ConvexDomain,
    params: &ObjPertParams,
    epsilon: f64,
    opts: &ObjPertOptions,
    stream: &RngStream,
) -> Result<RunOutput> {
    check_dim(domain.dim(), data.dim())?;
    if params.variant != Variant::Exact {
        return Err(Error::InvalidParameter("exact objective perturbation needs exact-variant parameters".into()));
    }
    let default_tol = params.alpha_opt * 1e-3;
    let tol = opts.tol.unwrap_or(default_tol);
    if !(tol > 0.0 && tol <= default_tol) {
        return Err(Error::Precondition(format!(
            "solver tolerance {tol:e} must lie in (0, alpha_opt * 1e-3 = {default_tol:e}]"
        )));
    }
    let noise = perturbation(domain.dim(), params.sigma2_obj, opts.noise_off, &stream.child(phase::OBJECTIVE_NOISE))?;
    let objective = PerturbedObjective::new(loss, data, &noise, params.lambda)?;
    let solved = minimize_perturbed(&objective, domain, domain.center(), tol)?;
    let mut out = RunOutput::new(solved.w, solved.gradient_calls * data.len() as u64, opts.noise_off);
    out.achieved_tolerance = Some(solved.gap);
    certify(out, loss, data, domain, params, epsilon, stream)
}

/// Samples `G`, runs SVRG on `J` to a certified gap of `alpha_opt`, adds
/// output noise `H` and projects.
pub fn run_objpert_app(
    loss: &dyn Loss,
    data: &Dataset,
    domain: &ConvexDomain,
    params: &ObjPertParams,
    epsilon: f64,
    opts: &ObjPertOptions,
    stream: &RngStream,
) -> Result<RunOutput> {
    check_dim(domain.dim(), data.dim())?;
    if params.variant != Variant::Approximate {
        return Err(Error::InvalidParameter(
            "approximate objective perturbation needs approximate-variant parameters".into(),
        ));
    }
    let noise = perturbation(domain.dim(), params.sigma2_obj, opts.noise_off, &stream.child(phase::OBJECTIVE_NOISE))?;
    let objective = PerturbedObjective::new(loss, data, &noise, params.lambda)?;
    let mut config = SvrgConfig::new(objective.smoothness()?, params.lambda)?;
    config.certificate_modulus = objective.strong_convexity();
    let solved = svrg(
        &objective,
        domain,
        &config,
        domain.center(),
        SvrgStop::Certified { tol: params.alpha_opt, max_epochs: MAX_SVRG_EPOCHS },
        &stream.child(phase::SVRG),
    )?;
    let w2 = solved.w;
    let h = perturbation(domain.dim(), params.sigma2_out, opts.noise_off, &stream.child(phase::OUTPUT_NOISE))?;
    let mut w = &w2 + h;
    domain.project_mut(&mut w);

    let mut out = RunOutput::new(w, solved.grad_evals, opts.noise_off);
    out.achieved_tolerance = solved.gaps.last().copied();
    if opts.sensitivity_audit {
        let reference = minimize_perturbed(&objective, domain, &w2, params.alpha_opt * 1e-4)?;
        out.sensitivity_gap = Some((&w2 - &reference.w).norm());
    }
    certify(out, loss, data, domain, params, epsilon, stream)
}
