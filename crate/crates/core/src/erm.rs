//! Deterministic constrained minimizers and optimality certificates.

use nalgebra::DVector;

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::loss::{Loss, Smoothness};

/// Result of a deterministic solve, with a certified suboptimality bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimized {
    pub w: DVector<f64>,
    /// Upper bound on `f(w) - min f`.
    pub gap: f64,
    pub iterations: usize,
    /// Objective-gradient evaluations (each one a full pass for finite sums).
    pub gradient_calls: u64,
}

/// Frank–Wolfe gap `max_v <g, w - v>`, an upper bound on `f(w) - min f` for
/// convex `f` with gradient `g` at `w`.
pub fn frank_wolfe_gap(domain: &ConvexDomain, w: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    (grad.dot(w) - domain.min_linear(grad)).max(0.0)
}

/// Suboptimality bound for a `mu`-strongly convex `f`:
/// `f(w) - min f <= -min_v [<g, v - w> + mu/2 ‖v - w‖²]`, attained at
/// `v = Proj(w - g/mu)`. Never worse than the Frank–Wolfe gap.
pub fn strong_convexity_gap(
    domain: &ConvexDomain,
    w: &DVector<f64>,
    grad: &DVector<f64>,
    mu: f64,
) -> f64 {
    let fw = frank_wolfe_gap(domain, w, grad);
    if !(mu > 0.0) {
        return fw;
    }
    let mut v = w - grad / mu;
    domain.project_mut(&mut v);
    let step = &v - w;
    let model = grad.dot(&step) + 0.5 * mu * step.norm_squared();
    (-model).max(0.0).min(fw)
}

/// Average loss gradient over the dataset.
pub fn empirical_gradient<L: Loss + ?Sized>(
    loss: &L,
    data: &Dataset,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut acc = DVector::zeros(w.len());
    for z in data.examples() {
        acc += loss.gradient(w, z)?;
    }
    Ok(acc / data.len() as f64)
}

/// Minimizes a smooth convex function over `domain`.
///
/// With `strong_convexity > 0` this is projected gradient descent with step
/// `1/smoothness`; otherwise accelerated projected gradient with adaptive
/// restart. Stops once the certified gap is at most `tol`.
pub fn minimize_smooth<F>(
    mut grad_at: F,
    domain: &ConvexDomain,
    start: &DVector<f64>,
    smoothness: f64,
    strong_convexity: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Minimized>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be positive and finite, got {smoothness}"
        )));
    }
    let step = 1.0 / smoothness;
    let mut w = domain.project(start)?;
    let mut calls = 0u64;

    if strong_convexity > 0.0 {
        let mut gap = f64::INFINITY;
        for it in 0..=max_iter {
            let g = grad_at(&w)?;
            calls += 1;
            gap = strong_convexity_gap(domain, &w, &g, strong_convexity);
            if gap <= tol {
                return Ok(Minimized { w, gap, iterations: it, gradient_calls: calls });
            }
            if it == max_iter {
                break;
            }
            w.axpy(-step, &g, 1.0);
            domain.project_mut(&mut w);
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { iteration: it + 1 });
            }
        }
        return Err(Error::ToleranceNotReached { achieved: gap, target: tol, iterations: max_iter });
    }

    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut gap = f64::INFINITY;
    for it in 0..max_iter {
        let gy = grad_at(&y)?;
        calls += 1;
        let mut next = &y - &gy * step;
        domain.project_mut(&mut next);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { iteration: it + 1 });
        }
        // gradient-based restart keeps the momentum from overshooting
        let restart = gy.dot(&(&next - &w)) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        y = if restart {
            next.clone()
        } else {
            &next + (&next - &w) * ((t - 1.0) / t_next)
        };
        t = t_next;
        w = next;
        if it % 10 == 9 {
            let gw = grad_at(&w)?;
            calls += 1;
            gap = frank_wolfe_gap(domain, &w, &gw);
            if gap <= tol {
                return Ok(Minimized { w, gap, iterations: it + 1, gradient_calls: calls });
            }
        }
    }
    Err(Error::ToleranceNotReached { achieved: gap, target: tol, iterations: max_iter })
}

/// Exact (closed-form) or high-accuracy empirical risk minimizer over `domain`.
pub fn empirical_minimizer<L: Loss + ?Sized>(
    loss: &L,
    data: &Dataset,
    domain: &ConvexDomain,
) -> Result<DVector<f64>> {
    if let Some(w) = loss.erm_minimizer(data, domain) {
        return Ok(w);
    }
    match loss.smoothness() {
        Smoothness::Smooth(beta) => {
            let solved = minimize_smooth(
                |w| empirical_gradient(loss, data, w),
                domain,
                domain.center(),
                beta.max(1e-12),
                0.0,
                1e-10,
                200_000,
            )?;
            Ok(solved.w)
        }
        Smoothness::NonSmooth => Err(Error::InvalidParameter(format!(
            "no empirical minimizer available for non-smooth loss `{}`",
            loss.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn certificates_bound_true_gap_for_quadratic() {
        // f(w) = ½‖w - a‖² over the unit ball, a outside
        let ball = ConvexDomain::centered_ball(2, 1.0).unwrap();
        let a = v(&[2.0, 0.0]);
        let f = |w: &DVector<f64>| 0.5 * (w - &a).norm_squared();
        let opt = v(&[1.0, 0.0]);
        for w in [v(&[0.0, 0.0]), v(&[0.5, 0.5]), v(&[-0.6, 0.8])] {
            let g = &w - &a;
            let true_gap = f(&w) - f(&opt);
            let fw = frank_wolfe_gap(&ball, &w, &g);
            let sc = strong_convexity_gap(&ball, &w, &g, 1.0);
            assert!(fw >= true_gap - 1e-12 && sc >= true_gap - 1e-12);
            assert!(sc <= fw + 1e-15);
        }
    }

    #[test]
    fn both_solvers_reach_tolerance() {
        let ball = ConvexDomain::centered_ball(3, 1.0).unwrap();
        let a = v(&[0.2, -0.3, 0.1]);
        let grad = |w: &DVector<f64>| Ok(w - &a);
        for mu in [1.0, 0.0] {
            let out = minimize_smooth(grad, &ball, &v(&[0.9, 0.0, 0.0]), 1.0, mu, 1e-12, 10_000).unwrap();
            assert!((out.w - &a).norm() < 1e-5, "mu = {mu}");
            assert!(out.gap <= 1e-12);
        }
    }
}
