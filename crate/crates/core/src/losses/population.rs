//! Empirical and population loss oracles.

use nalgebra::DVector;
use rayon::prelude::*;

use super::SyntheticDistribution;
use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::erm::empirical_minimizer;
use crate::error::{check_dim, Error, Result};
use crate::loss::Loss;
use crate::losses::DistributionKind;
use crate::rng::RngStream;
use crate::stats::MeanAccumulator;

/// Fresh samples used by Monte-Carlo population estimates unless overridden.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Monte-Carlo draws are split into this many independently keyed chunks.
const MC_CHUNKS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PopulationMode {
    /// Closed form where available, otherwise Monte Carlo for registered pairs.
    Auto,
    /// Monte Carlo with the given number of fresh samples, for any pair.
    MonteCarlo { samples: usize },
}

/// A (possibly estimated) scalar with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Zero for closed-form values.
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, samples: 0 }
    }
}

/// `(1/n) Σ l(w, z_i)`.
pub fn empirical_loss<L: Loss + ?Sized>(loss: &L, data: &Dataset, w: &DVector<f64>) -> f64 {
    data.examples().iter().map(|z| loss.value(w, z)).sum::<f64>() / data.len() as f64
}

/// `L(w; D) - min L(·; D)`.
///
/// The squared distance on the mean-estimation distribution is exact
/// (`½‖w - μ‖²`). The other registered pairs are estimated with common random
/// numbers against the known minimizer. Unregistered pairs need
/// [`PopulationMode::MonteCarlo`], which first solves a large-sample ERM over
/// `domain` for the reference point.
pub fn excess_population_loss(
    dist: &SyntheticDistribution,
    loss: &dyn Loss,
    domain: &ConvexDomain,
    w: &DVector<f64>,
    mode: PopulationMode,
    stream: &RngStream,
) -> Result<Estimate> {
    check_dim(dist.dim(), w.len())?;
    let registered = dist.pairs_with(loss);
    let closed_form = registered && dist.kind() == DistributionKind::BallUniformMeanEstimation;
    let samples = match mode {
        PopulationMode::Auto if closed_form => {
            return Ok(Estimate::exact(0.5 * (w - dist.population_minimizer()).norm_squared()));
        }
        PopulationMode::Auto if registered => DEFAULT_MC_SAMPLES,
        PopulationMode::Auto => {
            return Err(Error::UnregisteredPair {
                distribution: dist.name(),
                loss: loss.name(),
            })
        }
        PopulationMode::MonteCarlo { samples } => samples,
    };
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte-Carlo mode needs at least 2 samples".into()));
    }
    let reference = if registered {
        dist.population_minimizer().clone()
    } else {
        let big = dist.sample(samples, &stream.child(0))?;
        empirical_minimizer(loss, &big, domain)?
    };
    let acc = monte_carlo(dist, samples, &stream.child(1), |terms| {
        terms
            .iter()
            .map(|(p, z)| p * (loss.value(w, z) - loss.value(&reference, z)))
            .sum()
    });
    Ok(Estimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        samples,
    })
}

/// `L(w; D)` itself (not the excess).
pub fn population_loss(
    dist: &SyntheticDistribution,
    loss: &dyn Loss,
    domain: &ConvexDomain,
    w: &DVector<f64>,
    mode: PopulationMode,
    stream: &RngStream,
) -> Result<Estimate> {
    check_dim(dist.dim(), w.len())?;
    if mode == PopulationMode::Auto {
        if let (true, Some(min)) = (dist.pairs_with(loss), dist.population_min_loss()) {
            let excess = excess_population_loss(dist, loss, domain, w, mode, stream)?;
            return Ok(Estimate::exact(excess.value + min));
        }
    }
    let samples = match mode {
        PopulationMode::Auto => DEFAULT_MC_SAMPLES,
        PopulationMode::MonteCarlo { samples } => samples,
    };
    let acc = monte_carlo(dist, samples, &stream.child(1), |terms| {
        terms.iter().map(|(p, z)| p * loss.value(w, z)).sum()
    });
    Ok(Estimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        samples,
    })
}

fn monte_carlo<F>(
    dist: &SyntheticDistribution,
    samples: usize,
    stream: &RngStream,
    term: F,
) -> MeanAccumulator
where
    F: Fn(&[(f64, crate::loss::Example)]) -> f64 + Sync,
{
    let per_chunk = samples.div_ceil(MC_CHUNKS);
    (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let start = c * per_chunk;
            let count = per_chunk.min(samples.saturating_sub(start));
            let mut rng = stream.child(c as u64).rng();
            let mut acc = MeanAccumulator::new();
            for _ in 0..count {
                acc.push(term(&dist.sample_conditional(&mut rng)));
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(MeanAccumulator::new(), MeanAccumulator::merge)
}
