use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::Result;
use crate::loss::Loss;
use crate::losses::{empirical_loss, population_loss, PopulationMode, SyntheticDistribution};
use crate::rng::{phase, RngStream};
use crate::stats::MeanAccumulator;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Mean of `L(A(S); D) - L̂(A(S); S)` over fresh samples `S ~ D^n`.
pub fn generalization_gap<A>(
    algorithm: A,
    dist: &SyntheticDistribution,
    loss: &dyn Loss,
    domain: &ConvexDomain,
    n: usize,
    trials: usize,
    stream: &RngStream,
) -> Result<GapEstimate>
where
    A: Fn(&Dataset, &RngStream) -> Result<DVector<f64>> + Sync,
{
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = stream.child(t as u64);
            let data = dist.sample(n, &s.child(phase::DATA))?;
            let w = algorithm(&data, &s.child(phase::ALGORITHM))?;
            let pop = population_loss(dist, loss, domain, &w, PopulationMode::Auto, &s.child(phase::EVAL))?;
            Ok(pop.value - empirical_loss(loss, &data, &w))
        })
        .collect::<Result<_>>()?;
    let acc: MeanAccumulator = gaps.into_iter().collect();
    Ok(GapEstimate { mean: acc.mean(), std_error: acc.std_error(), trials })
}
