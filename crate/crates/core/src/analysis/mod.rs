//! Stability and generalization measurement, the resampling reduction from
//! private ERM to private SCO, and theory bounds for rate curves.

pub mod bounds;
mod generalization;
mod rate;
mod reduction;
mod stability;

pub use generalization::{generalization_gap, GapEstimate};
pub use rate::{rate_curve, RateCurve, RateRow};
pub use reduction::{erm_to_sco_reduction, reduced_budget, resample_hit_tail, ReductionOutput, TailEstimate};
pub use stability::{default_probes, estimate_uniform_stability, Probe, StabilityEstimate};
