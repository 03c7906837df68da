//! Algorithm outputs and their evaluation against the data distribution.

use nalgebra::DVector;
use serde::Serialize;

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::erm::empirical_minimizer;
use crate::error::Result;
use crate::loss::Loss;
use crate::losses::{empirical_loss, excess_population_loss, PopulationMode, SyntheticDistribution};
use crate::rng::RngStream;

/// What an algorithm returns before evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub w: DVector<f64>,
    /// Per-example gradient oracle calls.
    pub grad_evals: u64,
    /// Set when a testing override removed the privacy noise.
    pub non_private: bool,
    /// Cleared when a privacy or accuracy precondition could not be certified.
    pub certified: bool,
    /// Optimization accuracy actually achieved, for solvers run to a tolerance.
    pub achieved_tolerance: Option<f64>,
    /// Distance from the approximate to a high-accuracy minimizer, when audited.
    pub sensitivity_gap: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn new(w: DVector<f64>, grad_evals: u64, non_private: bool) -> Self {
        RunOutput {
            w,
            grad_evals,
            non_private,
            certified: true,
            achieved_tolerance: None,
            sensitivity_gap: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn uncertified(mut self, why: impl Into<String>) -> Self {
        self.certified = false;
        self.warnings.push(why.into());
        self
    }
}

/// One evaluated trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub w: Vec<f64>,
    pub excess_emp: f64,
    pub excess_pop: f64,
    /// Monte-Carlo standard error of `excess_pop`; 0 for closed forms.
    pub excess_pop_se: f64,
    pub grad_evals: u64,
    pub seed: u64,
    pub non_private: bool,
    pub certified: bool,
    pub warnings: Vec<String>,
}

impl TrialResult {
    /// Scores `output` on the training set and on the population.
    pub fn evaluate(
        output: RunOutput,
        loss: &dyn Loss,
        data: &Dataset,
        dist: &SyntheticDistribution,
        domain: &ConvexDomain,
        seed: u64,
        stream: &RngStream,
    ) -> Result<Self> {
        let w_erm = empirical_minimizer(loss, data, domain)?;
        let excess_emp = (empirical_loss(loss, data, &output.w) - empirical_loss(loss, data, &w_erm)).max(0.0);
        let pop = excess_population_loss(dist, loss, domain, &output.w, PopulationMode::Auto, stream)?;
        Ok(TrialResult {
            w: output.w.iter().copied().collect(),
            excess_emp,
            excess_pop: pop.value,
            excess_pop_se: pop.std_error,
            grad_evals: output.grad_evals,
            seed,
            non_private: output.non_private,
            certified: output.certified,
            warnings: output.warnings,
        })
    }
}
