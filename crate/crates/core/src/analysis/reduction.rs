use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::Result;
use crate::privacy::PrivacyBudget;
use crate::rng::{phase, RngStream};

/// Budget handed to the SCO algorithm:
/// `(eps / (4 ln(2/delta)), e^{-eps} delta / (8 ln(2/delta)))`.
pub fn reduced_budget(budget: PrivacyBudget) -> Result<PrivacyBudget> {
    let log_term = (2.0 / budget.delta()).ln();
    PrivacyBudget::new(
        budget.epsilon() / (4.0 * log_term),
        (-budget.epsilon()).exp() * budget.delta() / (8.0 * log_term),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionOutput<T> {
    pub output: T,
    /// Draws of the resample that hit the designated index.
    pub hits: usize,
    pub inner_budget: PrivacyBudget,
}

/// Resamples `n` examples with replacement from `data` and runs the SCO
/// algorithm on the resample with the reduced budget.
pub fn erm_to_sco_reduction<T, A>(
    algorithm: A,
    data: &Dataset,
    budget: PrivacyBudget,
    designated: usize,
    stream: &RngStream,
) -> Result<ReductionOutput<T>>
where
    A: FnOnce(&Dataset, PrivacyBudget, &RngStream) -> Result<T>,
{
    let inner_budget = reduced_budget(budget)?;
    let (resampled, hits) = data.resample(&stream.child(phase::RESAMPLE), designated);
    let output = algorithm(&resampled, inner_budget, &stream.child(phase::INNER))?;
    Ok(ReductionOutput { output, hits, inner_budget })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    /// Fraction of resamples with more than `threshold` hits.
    pub frequency: f64,
    pub threshold: f64,
    pub resamples: usize,
    pub max_hits: usize,
}

const TAIL_CHUNKS: u64 = 64;

/// Monte-Carlo tail `P(r > threshold)` of the hit count `r` of one index
/// when resampling `n` indices uniformly with replacement.
pub fn resample_hit_tail(n: usize, resamples: usize, threshold: f64, stream: &RngStream) -> TailEstimate {
    let per_chunk = resamples.div_ceil(TAIL_CHUNKS as usize);
    let (exceed, max_hits) = (0..TAIL_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.child(c).rng();
            let start = c as usize * per_chunk;
            let count = per_chunk.min(resamples.saturating_sub(start));
            let mut exceed = 0usize;
            let mut max_hits = 0usize;
            for _ in 0..count {
                let hits = (0..n).filter(|_| rng.random_range(0..n) == 0).count();
                exceed += usize::from(hits as f64 > threshold);
                max_hits = max_hits.max(hits);
            }
            (exceed, max_hits)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    TailEstimate {
        frequency: exceed as f64 / resamples as f64,
        threshold,
        resamples,
        max_hits,
    }
}
