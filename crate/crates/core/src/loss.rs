//! The per-example loss contract shared by every algorithm.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{check_dim, Error, Result};

/// A data point. Unlabeled losses ignore `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub x: DVector<f64>,
    pub y: f64,
}

impl Example {
    pub fn point(x: DVector<f64>) -> Self {
        Example { x, y: 0.0 }
    }

    pub fn labeled(x: DVector<f64>, y: f64) -> Self {
        Example { x, y }
    }
}

/// Certified smoothness of a loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    /// Gradient is `beta`-Lipschitz in `w`.
    Smooth(f64),
    NonSmooth,
}

impl Smoothness {
    pub fn beta(self) -> Option<f64> {
        match self {
            Smoothness::Smooth(b) => Some(b),
            Smoothness::NonSmooth => None,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Smooth(b) => write!(f, "{b}"),
            Smoothness::NonSmooth => f.write_str("non-smooth"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianRank {
    AtMost(usize),
    Unknown,
}

/// A convex per-example loss `l(w, z)` with certified constants.
///
/// `lipschitz` must bound `‖gradient(w, z)‖` over the domain the loss was
/// certified for, for every admissible `z`. The constants feed the noise
/// calibration, so they are worst-case values and never estimated from data.
pub trait Loss: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn value(&self, w: &DVector<f64>, z: &Example) -> f64;

    /// The gradient, or [`Error::NonDifferentiable`] at kinks.
    fn gradient(&self, w: &DVector<f64>, z: &Example) -> Result<DVector<f64>>;

    fn lipschitz(&self) -> f64;

    fn smoothness(&self) -> Smoothness;

    fn hessian_rank_hint(&self) -> HessianRank;

    /// A subgradient, defined everywhere.
    fn subgradient(&self, w: &DVector<f64>, z: &Example) -> DVector<f64> {
        self.gradient(w, z)
            .expect("smooth losses are differentiable everywhere")
    }

    /// Distance from `w` to the nearest point where the loss is not
    /// differentiable, if such points exist.
    fn kink_distance(&self, _w: &DVector<f64>, _z: &Example) -> Option<f64> {
        None
    }

    fn hessian(&self, w: &DVector<f64>, z: &Example) -> Result<DMatrix<f64>> {
        finite_diff_hessian(self, w, z, 1e-5)
    }

    /// Closed-form `argmin_v l(v, z)/beta + ½‖v - w‖²`, when one exists.
    fn exact_prox(&self, _w: &DVector<f64>, _z: &Example, _beta: f64) -> Option<DVector<f64>> {
        None
    }

    /// Closed-form empirical risk minimizer over `domain`, when one exists.
    fn erm_minimizer(&self, _data: &Dataset, _domain: &ConvexDomain) -> Option<DVector<f64>> {
        None
    }
}

/// Max-coordinate error between central differences and the analytic gradient.
pub fn finite_diff_grad_check<L: Loss + ?Sized>(
    loss: &L,
    w: &DVector<f64>,
    z: &Example,
    h: f64,
) -> Result<f64> {
    check_dim(loss.dim(), w.len())?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    if let Some(dist) = loss.kink_distance(w, z) {
        // the stencil spans an l-inf box of half-width h
        if dist <= h * (w.len() as f64).sqrt() {
            return Err(Error::NonDifferentiable { loss: loss.name() });
        }
    }
    let grad = loss.gradient(w, z)?;
    let mut probe = w.clone();
    let mut worst = 0.0f64;
    for i in 0..w.len() {
        let base = probe[i];
        probe[i] = base + h;
        let up = loss.value(&probe, z);
        probe[i] = base - h;
        let down = loss.value(&probe, z);
        probe[i] = base;
        worst = worst.max(((up - down) / (2.0 * h) - grad[i]).abs());
    }
    Ok(worst)
}

/// Hessian by central differences of the gradient, symmetrized.
pub fn finite_diff_hessian<L: Loss + ?Sized>(
    loss: &L,
    w: &DVector<f64>,
    z: &Example,
    h: f64,
) -> Result<DMatrix<f64>> {
    check_dim(loss.dim(), w.len())?;
    let d = w.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut probe = w.clone();
    for j in 0..d {
        let base = probe[j];
        probe[j] = base + h;
        let up = loss.gradient(&probe, z)?;
        probe[j] = base - h;
        let down = loss.gradient(&probe, z)?;
        probe[j] = base;
        hess.set_column(j, &((up - down) / (2.0 * h)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Largest `‖gradient‖ / L` over the given points; values above 1 falsify the
/// certified Lipschitz constant.
pub fn max_gradient_ratio<'a, L, I>(loss: &L, points: I) -> Result<f64>
where
    L: Loss + ?Sized,
    I: IntoIterator<Item = (&'a DVector<f64>, &'a Example)>,
{
    let mut worst = 0.0f64;
    for (w, z) in points {
        if loss.kink_distance(w, z) == Some(0.0) {
            continue;
        }
        worst = worst.max(loss.gradient(w, z)?.norm() / loss.lipschitz());
    }
    Ok(worst)
}

/// Largest `‖∇l(u) - ∇l(v)‖ / (beta ‖u - v‖)` over the given triples.
pub fn max_smoothness_ratio<'a, L, I>(loss: &L, triples: I) -> Result<f64>
where
    L: Loss + ?Sized,
    I: IntoIterator<Item = (&'a DVector<f64>, &'a DVector<f64>, &'a Example)>,
{
    let beta = loss
        .smoothness()
        .beta()
        .ok_or(Error::NonSmoothLoss(loss.name()))?;
    let mut worst = 0.0f64;
    for (u, v, z) in triples {
        let dist = (u - v).norm();
        if dist == 0.0 {
            continue;
        }
        let diff = (loss.gradient(u, z)? - loss.gradient(v, z)?).norm();
        let ratio = if beta > 0.0 {
            diff / (beta * dist)
        } else if diff > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}
