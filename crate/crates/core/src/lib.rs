//! Differentially private stochastic convex optimization.
//!
//! Four mechanisms over an L2-ball domain, each with its hyperparameters
//! derived in closed form from `(n, d, epsilon, delta, L, M)`:
//!
//! * [`nsgd`]: mini-batch noisy projected SGD for smooth losses;
//! * [`smoothing`]: the same loop on approximate Moreau-envelope gradients,
//!   for non-smooth losses;
//! * [`objpert`]: objective perturbation, solved exactly or by SVRG followed by
//!   output noise.
//!
//! [`losses`] provides synthetic benchmarks with population-loss oracles and
//! [`analysis`] the stability, generalization and rate measurements.

// `!(x > 0.0)` is the NaN-rejecting form of the parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithm;
pub mod analysis;
pub mod data;
pub mod domain;
pub mod erm;
pub mod error;
pub mod loss;
pub mod losses;
pub mod nsgd;
pub mod objpert;
pub mod privacy;
pub mod rng;
pub mod smoothing;
pub mod stats;
pub mod trial;

pub use algorithm::{run_trial, trial_stream, AlgorithmSpec, DerivedParams, RunOptions};
pub use data::Dataset;
pub use domain::ConvexDomain;
pub use error::{Error, Result};
pub use loss::{Example, HessianRank, Loss, Smoothness};
pub use losses::{DistributionKind, RegisteredLoss, SyntheticDistribution};
pub use privacy::PrivacyBudget;
pub use rng::RngStream;
pub use smoothing::ProxMode;
pub use trial::{RunOutput, TrialResult};

pub use nalgebra::DVector;
