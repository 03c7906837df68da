//! Algorithm selection, parameter derivation and single-trial execution.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{bounds, reduced_budget};
use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::losses::SyntheticDistribution;
use crate::nsgd::{check_nsgd_smoothness_precondition, derive_nsgd_params, run_nsgd, NsgdParams};
use crate::objpert::{derive_objpert_params, run_objpert_app, run_objpert_exact, ObjPertOptions, ObjPertParams, Variant};
use crate::privacy::PrivacyBudget;
use crate::rng::{phase, RngStream};
use crate::smoothing::{derive_proxgd_params, derive_smoothing_params, run_proxgd, ProxMode, SmoothingParams};
use crate::trial::{RunOutput, TrialResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgorithmSpec {
    Nsgd,
    ProxGd,
    ObjPert,
    ObjPertApp,
    /// Resample the data and run the inner algorithm with a reduced budget.
    ErmReduction(Box<AlgorithmSpec>),
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmSpec::Nsgd => f.write_str("nsgd"),
            AlgorithmSpec::ProxGd => f.write_str("proxgd"),
            AlgorithmSpec::ObjPert => f.write_str("objpert"),
            AlgorithmSpec::ObjPertApp => f.write_str("objpert-app"),
            AlgorithmSpec::ErmReduction(inner) => write!(f, "erm-reduction:{inner}"),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nsgd" => Ok(AlgorithmSpec::Nsgd),
            "proxgd" => Ok(AlgorithmSpec::ProxGd),
            "objpert" => Ok(AlgorithmSpec::ObjPert),
            "objpert-app" => Ok(AlgorithmSpec::ObjPertApp),
            other => match other.strip_prefix("erm-reduction:") {
                Some(inner) => Ok(AlgorithmSpec::ErmReduction(Box::new(inner.parse()?))),
                None => Err(Error::InvalidParameter(format!(
                    "unknown algorithm `{other}`; expected nsgd, proxgd, objpert, objpert-app or erm-reduction:<inner>"
                ))),
            },
        }
    }
}

/// Overrides shared by all algorithms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunOptions {
    /// Testing-only: drop every privacy noise term; outputs are tagged non-private.
    pub noise_off: bool,
    pub prox_mode: ProxMode,
    /// Solver accuracy for exact objective perturbation.
    pub objpert_tol: Option<f64>,
    pub sensitivity_audit: bool,
}

/// Every derived hyperparameter for one `(algorithm, n, d, budget)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedParams {
    pub algorithm: String,
    pub n: usize,
    pub d: usize,
    pub budget: PrivacyBudget,
    pub lipschitz: f64,
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nsgd: Option<NsgdParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objpert: Option<ObjPertParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<DerivedParams>>,
    pub theory_bound: f64,
}

impl AlgorithmSpec {
    /// The guarantee on the expected excess population loss.
    pub fn theory_bound(&self, n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> Result<f64> {
        Ok(match self {
            AlgorithmSpec::Nsgd => bounds::nsgd_population(n, d, budget, lipschitz, radius),
            AlgorithmSpec::ProxGd => bounds::proxgd_population(n, d, budget, lipschitz, radius),
            AlgorithmSpec::ObjPert => bounds::objpert_population(n, d, budget, lipschitz, radius),
            AlgorithmSpec::ObjPertApp => bounds::objpert_app_population(n, d, budget, lipschitz, radius)?,
            AlgorithmSpec::ErmReduction(inner) => {
                inner.theory_bound(n, d, reduced_budget(budget)?, lipschitz, radius)?
            }
        })
    }

    pub fn derive(&self, n: usize, d: usize, budget: PrivacyBudget, lipschitz: f64, radius: f64) -> Result<DerivedParams> {
        let mut out = DerivedParams {
            algorithm: self.to_string(),
            n,
            d,
            budget,
            lipschitz,
            radius,
            nsgd: None,
            smoothing: None,
            objpert: None,
            inner: None,
            theory_bound: self.theory_bound(n, d, budget, lipschitz, radius)?,
        };
        match self {
            AlgorithmSpec::Nsgd => out.nsgd = Some(derive_nsgd_params(n, d, budget, lipschitz, radius)?),
            AlgorithmSpec::ProxGd => {
                out.nsgd = Some(derive_proxgd_params(n, d, budget, lipschitz, radius)?);
                out.smoothing = Some(derive_smoothing_params(n, d, budget, lipschitz, radius)?);
            }
            AlgorithmSpec::ObjPert => {
                out.objpert = Some(derive_objpert_params(n, d, budget, lipschitz, radius, Variant::Exact)?)
            }
            AlgorithmSpec::ObjPertApp => {
                out.objpert = Some(derive_objpert_params(n, d, budget, lipschitz, radius, Variant::Approximate)?)
            }
            AlgorithmSpec::ErmReduction(inner) => {
                out.inner = Some(Box::new(inner.derive(n, d, reduced_budget(budget)?, lipschitz, radius)?))
            }
        }
        Ok(out)
    }

    /// Runs the algorithm on `data` from the domain center.
    pub fn run(
        &self,
        loss: &dyn Loss,
        data: &Dataset,
        domain: &ConvexDomain,
        budget: PrivacyBudget,
        opts: &RunOptions,
        stream: &RngStream,
    ) -> Result<RunOutput> {
        let n = data.len();
        let d = domain.dim();
        let lipschitz = loss.lipschitz();
        let radius = domain.radius();
        let w0 = domain.center().clone();
        match self {
            AlgorithmSpec::Nsgd => {
                let params = derive_nsgd_params(n, d, budget, lipschitz, radius)?.with_noise_off(opts.noise_off);
                let smooth_enough = check_nsgd_smoothness_precondition(loss, n, d, budget, radius)?;
                let mut out = run_nsgd(loss, data, domain, &params, &w0, stream)?;
                if !smooth_enough {
                    out.warnings.push(format!(
                        "smoothness {} exceeds the limit for the utility guarantee; the run stays private",
                        loss.smoothness()
                    ));
                }
                Ok(out)
            }
            AlgorithmSpec::ProxGd => {
                let params = derive_proxgd_params(n, d, budget, lipschitz, radius)?.with_noise_off(opts.noise_off);
                let smoothing = derive_smoothing_params(n, d, budget, lipschitz, radius)?;
                run_proxgd(loss, data, domain, &params, &smoothing, opts.prox_mode, &w0, stream)
            }
            AlgorithmSpec::ObjPert | AlgorithmSpec::ObjPertApp => {
                let variant = if *self == AlgorithmSpec::ObjPert { Variant::Exact } else { Variant::Approximate };
                let params = derive_objpert_params(n, d, budget, lipschitz, radius, variant)?;
                let objpert_opts = ObjPertOptions {
                    noise_off: opts.noise_off,
                    tol: opts.objpert_tol,
                    sensitivity_audit: opts.sensitivity_audit,
                };
                match variant {
                    Variant::Exact => run_objpert_exact(loss, data, domain, &params, budget.epsilon(), &objpert_opts, stream),
                    Variant::Approximate => run_objpert_app(loss, data, domain, &params, budget.epsilon(), &objpert_opts, stream),
                }
            }
            AlgorithmSpec::ErmReduction(inner) => {
                let reduced = crate::analysis::erm_to_sco_reduction(
                    |resampled, inner_budget, s| inner.run(loss, resampled, domain, inner_budget, opts, s),
                    data,
                    budget,
                    0,
                    stream,
                )?;
                Ok(reduced.output)
            }
        }
    }
}

/// The stream of trial `trial` at sample size `n`.
pub fn trial_stream(root_seed: u64, n: usize, trial: usize) -> RngStream {
    RngStream::new(root_seed).child(n as u64).child(trial as u64)
}

/// Samples a dataset, runs the algorithm and evaluates the output, each step
/// on its own child stream of `stream`.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    spec: &AlgorithmSpec,
    dist: &SyntheticDistribution,
    loss: &dyn Loss,
    domain: &ConvexDomain,
    n: usize,
    budget: PrivacyBudget,
    opts: &RunOptions,
    stream: &RngStream,
) -> Result<TrialResult> {
    let data = dist.sample(n, &stream.child(phase::DATA))?;
    let output = spec.run(loss, &data, domain, budget, opts, &stream.child(phase::ALGORITHM))?;
    TrialResult::evaluate(output, loss, &data, dist, domain, stream.seed(), &stream.child(phase::EVAL))
}
