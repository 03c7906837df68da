//! Moreau-envelope smoothing and noisy SGD on approximate envelope gradients.
//!
//! For a convex `L`-Lipschitz `f` and `beta > 0` the envelope is
//! `f_beta(w) = min_v f(v) + beta/2 ‖w - v‖²`, minimized at `prox_{f/beta}(w)`,
//! with gradient `beta (w - prox_{f/beta}(w))`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DVector;
use serde::Serialize;

use crate::data::Dataset;
use crate::domain::ConvexDomain;
use crate::error::{check_dim, Error, Result};
use crate::loss::{Example, Loss, Smoothness};
use crate::nsgd::{check_constants, derive_nsgd_params, noisy_sgd, NsgdParams};
use crate::privacy::PrivacyBudget;
use crate::rng::RngStream;
use crate::trial::RunOutput;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingParams {
    /// Envelope smoothness `beta`.
    pub beta: f64,
    /// Required accuracy of each approximate prox point.
    pub xi: f64,
    /// Certified inner iteration budget `ceil(8 M² / xi²)`.
    pub prox_max_iters: u64,
    /// Lipschitz constant used for the noise scale, `L (1 + 1/n)`.
    pub lipschitz_eff: f64,
}

/// `beta = (L/M) min(sqrt(n)/4, eps n / (8 sqrt(d ln(1/delta))))`,
/// `xi = 4 (M/n) max(2 sqrt(d ln(1/delta)) / (eps n), 1/sqrt(n))`.
pub fn derive_smoothing_params(
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    lipschitz: f64,
    radius: f64,
) -> Result<SmoothingParams> {
    budget.validate_for(n)?;
    check_constants(lipschitz, radius)?;
    let nf = n as f64;
    let eps = budget.epsilon();
    let root = (d as f64 * budget.log_inv_delta()).sqrt();
    let beta = lipschitz / radius * (nf.sqrt() / 4.0).min(eps * nf / (8.0 * root));
    let xi = 4.0 * radius / nf * (2.0 * root / (eps * nf)).max(1.0 / nf.sqrt());
    Ok(SmoothingParams {
        beta,
        xi,
        prox_max_iters: certified_prox_budget(radius, xi),
        lipschitz_eff: lipschitz * (1.0 + 1.0 / nf),
    })
}

/// `ceil(8 M² / xi²)` projected subgradient steps.
pub fn certified_prox_budget(radius: f64, xi: f64) -> u64 {
    let steps = (8.0 * radius * radius / (xi * xi)).ceil();
    if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps as u64
    }
}

/// NSGD parameters for the smoothed problem, with `L` replaced by `L (1 + 1/n)`.
pub fn derive_proxgd_params(
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    lipschitz: f64,
    radius: f64,
) -> Result<NsgdParams> {
    derive_nsgd_params(n, d, budget, lipschitz * (1.0 + 1.0 / n as f64), radius)
}

/// Block soft-thresholding: the prox of `‖· - z‖ / beta` at `w`.
pub fn prox_exact_norm(w: &DVector<f64>, z: &DVector<f64>, beta: f64) -> DVector<f64> {
    let diff = w - z;
    let r = diff.norm();
    if r * beta <= 1.0 {
        return z.clone();
    }
    z + diff * (1.0 - 1.0 / (beta * r))
}

/// How the prox point of each example's loss is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProxMode {
    /// Projected subgradient descent with the full `ceil(8M²/xi²)` budget.
    #[default]
    CertifiedGd,
    /// The same solver stopped after at most this many steps.
    CappedGd(u64),
    /// The loss's closed-form prox.
    ExactOracle,
}

impl fmt::Display for ProxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxMode::CertifiedGd => f.write_str("certified-gd"),
            ProxMode::CappedGd(k) => write!(f, "capped-gd:{k}"),
            ProxMode::ExactOracle => f.write_str("exact-oracle"),
        }
    }
}

impl FromStr for ProxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "certified-gd" => Ok(ProxMode::CertifiedGd),
            "exact-oracle" => Ok(ProxMode::ExactOracle),
            other => match other.strip_prefix("capped-gd:").map(str::parse::<u64>) {
                Some(Ok(k)) if k > 0 => Ok(ProxMode::CappedGd(k)),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown prox mode `{other}`; expected certified-gd, capped-gd:<iters> or exact-oracle"
                ))),
            },
        }
    }
}

/// An approximate prox point.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxPoint {
    pub point: DVector<f64>,
    /// Subgradient evaluations spent.
    pub steps: u64,
    /// False when the iteration budget was capped below the certified one.
    pub certified: bool,
}

/// Approximates `prox_{f/beta}(w)` over `domain` for `f = loss(·, z)` by
/// projected subgradient descent on the 1-strongly convex
/// `g_w(v) = f(v)/beta + ½‖v - w‖²`, step `2/(s+1)`, weighted averaging.
pub fn approx_prox<L: Loss + ?Sized>(
    loss: &L,
    z: &Example,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    cap: u64,
) -> Result<ProxPoint> {
    check_dim(domain.dim(), w.len())?;
    let radius = domain.radius();
    let lipschitz = loss.lipschitz();
    if !(beta * radius >= lipschitz * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "approximate prox needs beta >= L/M, got beta = {beta}, L/M = {}",
            lipschitz / radius
        )));
    }
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("prox accuracy must be positive, got {xi}")));
    }
    let budget = certified_prox_budget(radius, xi);
    let steps = cap.min(budget);
    let g_w = |v: &DVector<f64>| loss.value(v, z) / beta + 0.5 * (v - w).norm_squared();

    let mut v = domain.project(w)?;
    let start = v.clone();
    let mut avg = v.clone();
    for s in 1..=steps {
        let sub = loss.subgradient(&v, z) / beta + (&v - w);
        let step = 2.0 / (s as f64 + 1.0);
        v.axpy(-step, &sub, 1.0);
        domain.project_mut(&mut v);
        // avg is the s(s+1)/2-normalized weighted mean of v_1..v_{s+1}
        let weight = 2.0 / (s as f64 + 2.0);
        avg.axpy(weight, &(&v - &avg), 1.0);
    }
    let mut best = start;
    let mut best_val = g_w(&best);
    for cand in [avg, v] {
        let val = g_w(&cand);
        if val < best_val {
            best = cand;
            best_val = val;
        }
    }
    Ok(ProxPoint {
        point: best,
        steps,
        certified: steps >= budget,
    })
}

/// Prox point of one example's loss under `mode`.
pub fn prox_point<L: Loss + ?Sized>(
    loss: &L,
    z: &Example,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    mode: ProxMode,
) -> Result<ProxPoint> {
    match mode {
        ProxMode::ExactOracle => {
            let point = loss.exact_prox(w, z, beta).ok_or(Error::NoExactProx(loss.name()))?;
            if !domain.contains(&point, 1e-9) {
                return Err(Error::Precondition(
                    "closed-form prox point lies outside the domain; use a gradient prox mode".into(),
                ));
            }
            Ok(ProxPoint { point, steps: 1, certified: true })
        }
        ProxMode::CertifiedGd => approx_prox(loss, z, beta, w, xi, domain, u64::MAX),
        ProxMode::CappedGd(cap) => approx_prox(loss, z, beta, w, xi, domain, cap),
    }
}

/// Envelope value and gradient at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub value: f64,
    pub grad: DVector<f64>,
    pub prox: ProxPoint,
}

pub fn envelope<L: Loss + ?Sized>(
    loss: &L,
    z: &Example,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    mode: ProxMode,
) -> Result<Envelope> {
    let prox = prox_point(loss, z, beta, w, xi, domain, mode)?;
    let residual = w - &prox.point;
    Ok(Envelope {
        value: loss.value(&prox.point, z) + 0.5 * beta * residual.norm_squared(),
        grad: residual * beta,
        prox,
    })
}

/// `f(v) + beta/2 ‖w - v‖²` at the (approximate) prox point `v`.
pub fn moreau_value<L: Loss + ?Sized>(
    loss: &L,
    z: &Example,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    mode: ProxMode,
) -> Result<f64> {
    Ok(envelope(loss, z, beta, w, xi, domain, mode)?.value)
}

/// `beta (w - v)` at the (approximate) prox point `v`.
pub fn moreau_grad<L: Loss + ?Sized>(
    loss: &L,
    z: &Example,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    mode: ProxMode,
) -> Result<DVector<f64>> {
    Ok(envelope(loss, z, beta, w, xi, domain, mode)?.grad)
}

/// Average envelope value over the dataset.
pub fn empirical_envelope<L: Loss + ?Sized>(
    loss: &L,
    data: &Dataset,
    beta: f64,
    w: &DVector<f64>,
    xi: f64,
    domain: &ConvexDomain,
    mode: ProxMode,
) -> Result<f64> {
    let mut acc = 0.0;
    for z in data.examples() {
        acc += moreau_value(loss, z, beta, w, xi, domain, mode)?;
    }
    Ok(acc / data.len() as f64)
}

/// Noisy SGD where each per-example gradient is the approximate envelope
/// gradient of a non-smooth loss. `grad_evals` counts inner prox steps.
#[allow(clippy::too_many_arguments)]
pub fn run_proxgd<L: Loss + ?Sized>(
    loss: &L,
    data: &Dataset,
    domain: &ConvexDomain,
    params: &NsgdParams,
    smoothing: &SmoothingParams,
    mode: ProxMode,
    w0: &DVector<f64>,
    stream: &RngStream,
) -> Result<RunOutput> {
    if let Smoothness::Smooth(_) = loss.smoothness() {
        return Err(Error::InvalidParameter(format!(
            "loss `{}` is smooth; run nsgd on it directly",
            loss.name()
        )));
    }
    check_dim(loss.dim(), data.dim())?;
    let all_certified = AtomicBool::new(true);
    let beta = smoothing.beta;
    let xi = smoothing.xi;
    let out = noisy_sgd(
        data,
        domain,
        params,
        w0,
        stream,
        mode != ProxMode::ExactOracle,
        |w, z| {
            let prox = prox_point(loss, z, beta, w, xi, domain, mode)?;
            if !prox.certified {
                all_certified.store(false, Ordering::Relaxed);
            }
            Ok(((w - &prox.point) * beta, prox.steps))
        },
    )?;
    if all_certified.load(Ordering::Relaxed) {
        Ok(out)
    } else {
        Ok(out.uncertified(format!(
            "prox solves capped below the certified budget of {} steps",
            smoothing.prox_max_iters
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::euclidean_norm_loss;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn headline_smoothing_parameters() {
        let b = PrivacyBudget::new(1.0, 1e-6).unwrap();
        let p = derive_smoothing_params(1000, 10, b, 1.0, 1.0).unwrap();
        let root = (10.0 * 1e6f64.ln()).sqrt();
        assert!((root - 11.754).abs() < 1e-3);
        assert!((p.beta - 1000f64.sqrt() / 4.0).abs() < 1e-12);
        assert!((p.beta - 7.9057).abs() < 1e-4);
        assert!((p.xi - 4e-3 / 1000f64.sqrt()).abs() < 1e-15);
        assert!((p.xi - 1.26491e-4).abs() < 1e-9);
        assert_eq!(p.prox_max_iters, 500_000_000);
        assert!((p.lipschitz_eff - 1.001).abs() < 1e-15);
        // the documented relation beta * xi = L / n
        assert!((p.beta * p.xi - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn exact_norm_prox_cases() {
        assert_eq!(prox_exact_norm(&v(&[1.0, 0.0]), &v(&[0.0, 0.0]), 2.0), v(&[0.5, 0.0]));
        assert_eq!(prox_exact_norm(&v(&[0.2, 0.0]), &v(&[0.0, 0.0]), 2.0), v(&[0.0, 0.0]));
        assert_eq!(prox_exact_norm(&v(&[0.3, 0.4]), &v(&[0.3, 0.4]), 2.0), v(&[0.3, 0.4]));
    }

    #[test]
    fn exact_prox_matches_line_search() {
        // minimize |t| + (t - 1)² by bisection on its subgradient
        let phi = |t: f64| t.abs() + (t - 1.0) * (t - 1.0);
        let slope = |t: f64| t.signum() + 2.0 * (t - 1.0);
        let (mut a, mut b) = (1e-3f64, 2.0f64);
        while b - a > 1e-13 {
            let mid = 0.5 * (a + b);
            if slope(mid) > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let t = 0.5 * (a + b);
        assert!((t - 0.5).abs() < 1e-10);
        assert!((phi(t) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("certified-gd".parse::<ProxMode>().unwrap(), ProxMode::CertifiedGd);
        assert_eq!("capped-gd:500".parse::<ProxMode>().unwrap(), ProxMode::CappedGd(500));
        assert_eq!("exact-oracle".parse::<ProxMode>().unwrap(), ProxMode::ExactOracle);
        assert!("capped-gd:x".parse::<ProxMode>().is_err());
        assert!("newton".parse::<ProxMode>().is_err());
        assert_eq!(ProxMode::CappedGd(7).to_string(), "capped-gd:7");
    }

    #[test]
    fn envelope_examples() {
        let loss = euclidean_norm_loss(2);
        let dom = ConvexDomain::centered_ball(2, 1.0).unwrap();
        let z = Example::point(v(&[0.0, 0.0]));
        let e = envelope(&loss, &z, 2.0, &v(&[1.0, 0.0]), 1e-3, &dom, ProxMode::ExactOracle).unwrap();
        assert!((e.value - 0.75).abs() < 1e-15);
        assert!((e.grad.clone() - v(&[1.0, 0.0])).norm() < 1e-15);
        let e = envelope(&loss, &z, 2.0, &v(&[0.2, 0.0]), 1e-3, &dom, ProxMode::ExactOracle).unwrap();
        assert!((e.value - 0.04).abs() < 1e-15);
        assert!((e.grad - v(&[0.4, 0.0])).norm() < 1e-15);
        let at = Example::point(v(&[0.1, 0.1]));
        let e = envelope(&loss, &at, 2.0, &at.x, 1e-3, &dom, ProxMode::ExactOracle).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.grad.norm(), 0.0);
    }

    #[test]
    fn approx_prox_near_exact() {
        let loss = euclidean_norm_loss(2);
        let dom = ConvexDomain::centered_ball(2, 1.0).unwrap();
        let z = Example::point(v(&[0.0, 0.0]));
        let p = approx_prox(&loss, &z, 2.0, &v(&[1.0, 0.0]), 1e-3, &dom, u64::MAX).unwrap();
        assert!(p.certified);
        assert_eq!(p.steps, 8_000_000);
        assert!((p.point - v(&[0.5, 0.0])).norm() <= 1e-3);
        let capped = approx_prox(&loss, &z, 2.0, &v(&[1.0, 0.0]), 1e-3, &dom, 1000).unwrap();
        assert!(!capped.certified);
        assert_eq!(capped.steps, 1000);
    }

    #[test]
    fn approx_prox_rejects_small_beta() {
        let loss = euclidean_norm_loss(2);
        let dom = ConvexDomain::centered_ball(2, 1.0).unwrap();
        let z = Example::point(v(&[0.0, 0.0]));
        assert!(matches!(
            approx_prox(&loss, &z, 0.5, &v(&[0.5, 0.0]), 1e-2, &dom, 10),
            Err(Error::Precondition(_))
        ));
    }
}
