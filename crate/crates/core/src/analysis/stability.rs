use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::Result;
use crate::loss::{Example, Loss};
use crate::losses::SyntheticDistribution;
use crate::rng::RngStream;
use crate::stats::MeanAccumulator;

/// A probe example with a label for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub label: String,
    pub example: Example,
}

/// Paired-run estimate of `E[l(A(S), z) - l(A(S'), z)]` at one probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityEstimate {
    pub mean_gap: f64,
    pub std_error: f64,
    pub pairs: usize,
    pub probe: String,
}

impl StabilityEstimate {
    /// Whether `|mean gap| <= bound + k * std_error`.
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.mean_gap.abs() <= bound + k * self.std_error
    }
}

/// The replaced example plus `extra` fresh draws from `dist`.
pub fn default_probes(
    replacement: &Example,
    dist: &SyntheticDistribution,
    extra: usize,
    stream: &RngStream,
) -> Vec<Probe> {
    let mut rng = stream.rng();
    let mut probes = vec![Probe { label: "replacement".into(), example: replacement.clone() }];
    probes.extend((0..extra).map(|i| Probe {
        label: format!("random-{i}"),
        example: dist.sample_example(&mut rng),
    }));
    probes
}

/// Runs `algorithm` on `base` and on `base` with example `index` replaced by
/// `replacement`, sharing the stream `stream.child(pair)` between the two
/// runs of each pair, and averages the probe-loss differences.
#[allow(clippy::too_many_arguments)]
pub fn estimate_uniform_stability<A>(
    algorithm: A,
    loss: &dyn Loss,
    base: &Dataset,
    index: usize,
    replacement: &Example,
    probes: &[Probe],
    pairs: usize,
    stream: &RngStream,
) -> Result<Vec<StabilityEstimate>>
where
    A: Fn(&Dataset, &RngStream) -> Result<DVector<f64>> + Sync,
{
    let neighbor = base.with_replaced(index, replacement.clone())?;
    let gaps: Vec<Vec<f64>> = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let shared = stream.child(p as u64);
            let w = algorithm(base, &shared)?;
            let w_prime = algorithm(&neighbor, &shared)?;
            Ok(probes
                .iter()
                .map(|probe| loss.value(&w, &probe.example) - loss.value(&w_prime, &probe.example))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(probes
        .iter()
        .enumerate()
        .map(|(j, probe)| {
            let acc: MeanAccumulator = gaps.iter().map(|row| row[j]).collect();
            StabilityEstimate {
                mean_gap: acc.mean(),
                std_error: acc.std_error(),
                pairs,
                probe: probe.label.clone(),
            }
        })
        .collect())
}
