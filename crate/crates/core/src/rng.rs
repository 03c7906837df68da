//! Counter-keyed random streams.
//!
//! A stream is identified by a root seed plus a path of integers (for example
//! `[n, trial, phase, step]`). The generator for a path is a ChaCha20 instance
//! keyed by a SHA-256 digest of the root seed and path, so any stream can be
//! reproduced in isolation regardless of the order in which other streams were
//! consumed.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rand::SeedableRng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Well-known path components.
pub mod phase {
    pub const DATA: u64 = 1;
    pub const ALGORITHM: u64 = 2;
    pub const EVAL: u64 = 3;
    pub const BATCH: u64 = 10;
    pub const NOISE: u64 = 11;
    pub const OBJECTIVE_NOISE: u64 = 12;
    pub const OUTPUT_NOISE: u64 = 13;
    pub const SVRG: u64 = 14;
    pub const RESAMPLE: u64 = 15;
    pub const INNER: u64 = 16;
    pub const PROBE: u64 = 17;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        RngStream {
            root_seed,
            path: Vec::new(),
        }
    }

    pub fn child(&self, id: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(id);
        RngStream {
            root_seed: self.root_seed,
            path,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"dpsco.stream.v1");
        hasher.update(self.root_seed.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for id in &self.path {
            hasher.update(id.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        key
    }

    /// A 64-bit fingerprint of this stream, recorded alongside results.
    pub fn seed(&self) -> u64 {
        let key = self.key();
        u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
    }

    /// A fresh generator positioned at draw index 0 of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.key())
    }
}

/// `N(0, variance I_dim)` drawn from the given stream.
pub fn sample_gaussian(dim: usize, variance: f64, stream: &RngStream) -> Result<DVector<f64>> {
    sample_gaussian_with(dim, variance, &mut stream.rng())
}

pub fn sample_gaussian_with<R: Rng + ?Sized>(
    dim: usize,
    variance: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gaussian variance must be finite and non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(DVector::zeros(dim));
    }
    let sd = variance.sqrt();
    Ok(DVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sd * g
        }),
    ))
}

/// Uniform draw from the unit sphere in `R^dim`.
pub(crate) fn unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g: DVector<f64> = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// Uniform draw from the ball of the given radius in `R^dim`.
pub(crate) fn uniform_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> DVector<f64> {
    let dir = unit_sphere(dim, rng);
    let u: f64 = rng.random();
    dir * (radius * u.powf(1.0 / dim as f64))
}
