use rayon::prelude::*;
use serde::Serialize;

use crate::algorithm::{run_trial, trial_stream, AlgorithmSpec, RunOptions};
use crate::domain::ConvexDomain;
use crate::error::Result;
use crate::loss::Loss;
use crate::losses::SyntheticDistribution;
use crate::privacy::PrivacyBudget;
use crate::stats::MeanAccumulator;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub algorithm: String,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub mean_excess_pop: f64,
    pub std_error: f64,
    pub theory_bound: f64,
}

impl RateRow {
    pub fn ratio(&self) -> f64 {
        self.mean_excess_pop / self.theory_bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct RateCurve {
    pub rows: Vec<RateRow>,
}

impl RateCurve {
    /// Whether the mean is non-increasing in `n`, allowing at most one
    /// increase, and that one no larger than the standard error of the
    /// difference of the two means.
    pub fn non_increasing_with_one_inversion(&self) -> bool {
        let mut inversions = 0;
        for pair in self.rows.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.mean_excess_pop > a.mean_excess_pop {
                inversions += 1;
                let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
                if inversions > 1 || b.mean_excess_pop - a.mean_excess_pop > se {
                    return false;
                }
            }
        }
        true
    }
}

/// One row per sample size: mean excess population loss over `trials`
/// seeded trials next to the theory bound.
#[allow(clippy::too_many_arguments)]
pub fn rate_curve(
    spec: &AlgorithmSpec,
    dist: &SyntheticDistribution,
    loss: &dyn Loss,
    domain: &ConvexDomain,
    ns: &[usize],
    budget: PrivacyBudget,
    trials: usize,
    opts: &RunOptions,
    root_seed: u64,
) -> Result<RateCurve> {
    let d = domain.dim();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let excess: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                run_trial(spec, dist, loss, domain, n, budget, opts, &trial_stream(root_seed, n, t))
                    .map(|r| r.excess_pop)
            })
            .collect::<Result<_>>()?;
        let acc: MeanAccumulator = excess.into_iter().collect();
        rows.push(RateRow {
            algorithm: spec.to_string(),
            n,
            d,
            epsilon: budget.epsilon(),
            delta: budget.delta(),
            trials,
            mean_excess_pop: acc.mean(),
            std_error: acc.std_error(),
            theory_bound: spec.theory_bound(n, d, budget, loss.lipschitz(), domain.radius())?,
        });
    }
    Ok(RateCurve { rows })
}
