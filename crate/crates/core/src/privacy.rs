use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `(epsilon, delta)` privacy budget.
///
/// Construction enforces `0 < epsilon <= 1` and `0 < delta < 1`; the
/// dataset-dependent requirement `delta <= 1/n^2` is checked by
/// [`PrivacyBudget::validate_for`] at algorithm entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Budget(format!(
                "epsilon = {epsilon} violates the precondition 0 < epsilon <= 1"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Budget(format!(
                "delta = {delta} violates the precondition 0 < delta < 1"
            )));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `ln(1/delta)`.
    pub fn log_inv_delta(&self) -> f64 {
        -self.delta.ln()
    }

    /// Checks `delta <= 1/n^2` for a dataset of `n` examples.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("dataset must be non-empty".into()));
        }
        let limit = 1.0 / (n as f64 * n as f64);
        if self.delta > limit {
            return Err(Error::Budget(format!(
                "delta = {} exceeds 1/n^2 = {limit:e} for n = {n}; \
                 the private algorithms require delta <= 1/n^2",
                self.delta
            )));
        }
        Ok(())
    }
}
