use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::loss::Example;
use crate::rng::RngStream;

/// An immutable, non-empty sample `S = (z_1, ..., z_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::InvalidParameter("dataset must contain at least one example".into()));
        }
        let dim = examples[0].x.len();
        if let Some(bad) = examples.iter().find(|e| e.x.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.x.len(),
            });
        }
        Ok(Dataset { examples })
    }

    pub fn from_points<I: IntoIterator<Item = DVector<f64>>>(points: I) -> Result<Self> {
        Self::new(points.into_iter().map(Example::point).collect())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.examples[0].x.len()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    /// Neighboring dataset with example `index` replaced.
    pub fn with_replaced(&self, index: usize, replacement: Example) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "replacement index {index} out of range for n = {}",
                self.len()
            )));
        }
        let mut examples = self.examples.clone();
        examples[index] = replacement;
        Self::new(examples)
    }

    /// `n` draws with replacement from the empirical distribution, together
    /// with the number of draws that hit `designated`.
    pub fn resample(&self, stream: &RngStream, designated: usize) -> (Self, usize) {
        let mut rng = stream.rng();
        let n = self.len();
        let mut hits = 0;
        let examples = (0..n)
            .map(|_| {
                let i = rng.random_range(0..n);
                hits += usize::from(i == designated);
                self.examples[i].clone()
            })
            .collect();
        (Dataset { examples }, hits)
    }

    pub fn mean_x(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim());
        for e in &self.examples {
            acc += &e.x;
        }
        acc / self.len() as f64
    }
}
