use std::sync::Arc;

use dpsco::analysis::{
    bounds, default_probes, erm_to_sco_reduction, estimate_uniform_stability, generalization_gap, rate_curve,
};
use dpsco::erm::empirical_minimizer;
use dpsco::nsgd::{derive_nsgd_params, run_nsgd};
use dpsco::{
    AlgorithmSpec, ConvexDomain, Dataset, DistributionKind, Example, Loss, PrivacyBudget, RngStream, RunOptions,
    SyntheticDistribution,
};
use nalgebra::DVector;

struct Setup {
    dist: SyntheticDistribution,
    loss: Arc<dyn Loss>,
    domain: ConvexDomain,
}

fn mean_estimation(d: usize) -> Setup {
    let dist = SyntheticDistribution::from_name(DistributionKind::BallUniformMeanEstimation, d, 0.5, 1.0).unwrap();
    let loss = dist.natural_loss(1.0).unwrap();
    let domain = ConvexDomain::centered_ball(d, 1.0).unwrap();
    Setup { dist, loss, domain }
}

#[test]
fn constant_algorithm_is_perfectly_stable() {
    let s = mean_estimation(3);
    let base = s.dist.sample(50, &RngStream::new(1)).unwrap();
    let replacement = Example::point(DVector::from_element(3, 0.5));
    let probes = default_probes(&replacement, &s.dist, 10, &RngStream::new(2));
    let w0 = DVector::from_element(3, 0.1);
    let est = estimate_uniform_stability(
        |_, _| Ok(w0.clone()),
        s.loss.as_ref(),
        &base,
        0,
        &replacement,
        &probes,
        20,
        &RngStream::new(3),
    )
    .unwrap();
    assert_eq!(est.len(), 11);
    for e in est {
        assert_eq!(e.mean_gap, 0.0);
        assert_eq!(e.std_error, 0.0);
    }
}

#[test]
fn swapping_neighbors_negates_the_gap() {
    let s = mean_estimation(5);
    let n = 200;
    let base = s.dist.sample(n, &RngStream::new(4)).unwrap();
    let replacement = Example::point(DVector::from_element(5, -0.4));
    let original = base.get(7).clone();
    let neighbor = base.with_replaced(7, replacement.clone()).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let params = derive_nsgd_params(n, 5, budget, s.loss.lipschitz(), 1.0).unwrap();
    let algo = |data: &Dataset, st: &RngStream| {
        Ok(run_nsgd(s.loss.as_ref(), data, &s.domain, &params, &DVector::zeros(5), st)?.w)
    };
    let probes = default_probes(&replacement, &s.dist, 3, &RngStream::new(5));
    let fwd = estimate_uniform_stability(algo, s.loss.as_ref(), &base, 7, &replacement, &probes, 100, &RngStream::new(6))
        .unwrap();
    let back = estimate_uniform_stability(algo, s.loss.as_ref(), &neighbor, 7, &original, &probes, 100, &RngStream::new(6))
        .unwrap();
    for (a, b) in fwd.iter().zip(&back) {
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean_gap + b.mean_gap).abs() <= 3.0 * se + 1e-12, "{a:?} vs {b:?}");
    }
}

#[test]
fn constant_algorithm_has_no_generalization_gap() {
    let s = mean_estimation(4);
    let w0 = DVector::from_element(4, 0.2);
    let gap = generalization_gap(|_, _| Ok(w0.clone()), &s.dist, s.loss.as_ref(), &s.domain, 100, 200, &RngStream::new(8))
        .unwrap();
    assert!(gap.mean.abs() <= 3.0 * gap.std_error, "{gap:?}");
}

#[test]
fn nsgd_gap_respects_its_stability_bound() {
    let s = mean_estimation(10);
    let n = 1000;
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let params = derive_nsgd_params(n, 10, budget, s.loss.lipschitz(), 1.0).unwrap();
    let algo = |data: &Dataset, st: &RngStream| {
        Ok(run_nsgd(s.loss.as_ref(), data, &s.domain, &params, &DVector::zeros(10), st)?.w)
    };
    let gap = generalization_gap(algo, &s.dist, s.loss.as_ref(), &s.domain, n, 100, &RngStream::new(9)).unwrap();
    let bound = bounds::nsgd_stability(s.loss.lipschitz(), params.step_size, params.iterations, n);
    assert!(gap.mean <= bound + 3.0 * gap.std_error, "{gap:?} vs {bound}");
}

#[test]
fn unregularized_erm_overfits_more_than_nsgd() {
    let d = 50;
    let n = 50;
    let s = mean_estimation(d);
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let params = derive_nsgd_params(n, d, budget, s.loss.lipschitz(), 1.0).unwrap();
    let erm = generalization_gap(
        |data: &Dataset, _: &RngStream| empirical_minimizer(s.loss.as_ref(), data, &s.domain),
        &s.dist,
        s.loss.as_ref(),
        &s.domain,
        n,
        100,
        &RngStream::new(10),
    )
    .unwrap();
    let nsgd = generalization_gap(
        |data: &Dataset, st: &RngStream| Ok(run_nsgd(s.loss.as_ref(), data, &s.domain, &params, &DVector::zeros(d), st)?.w),
        &s.dist,
        s.loss.as_ref(),
        &s.domain,
        n,
        100,
        &RngStream::new(10),
    )
    .unwrap();
    assert!(erm.mean > 0.0);
    assert!(erm.mean > nsgd.mean, "erm {erm:?} nsgd {nsgd:?}");
}

#[test]
fn reduction_on_identical_examples_keeps_the_data() {
    let z = DVector::from_element(3, 0.25);
    let data = Dataset::from_points(vec![z.clone(); 40]).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let out = erm_to_sco_reduction(
        |resampled: &Dataset, inner: PrivacyBudget, _: &RngStream| {
            assert!((inner.epsilon() - 1.7231090877e-2).abs() < 1e-11);
            Ok(resampled.clone())
        },
        &data,
        budget,
        0,
        &RngStream::new(12),
    )
    .unwrap();
    assert_eq!(out.output, data);
}

#[test]
fn rate_rows_carry_the_shared_bound() {
    let s = mean_estimation(10);
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let ns = [250, 500];
    let curve = rate_curve(
        &AlgorithmSpec::Nsgd,
        &s.dist,
        s.loss.as_ref(),
        &s.domain,
        &ns,
        budget,
        8,
        &RunOptions::default(),
        21,
    )
    .unwrap();
    assert_eq!(curve.rows.len(), 2);
    for (row, &n) in curve.rows.iter().zip(&ns) {
        assert_eq!(row.n, n);
        assert_eq!(row.trials, 8);
        assert_eq!(row.theory_bound, bounds::nsgd_population(n, 10, budget, s.loss.lipschitz(), 1.0));
        assert!(row.ratio() <= 1.0);
    }
}

#[test]
fn bound_switches_branch_with_dimension() {
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let n = 1000;
    for d in [1usize, 10, 100, 1000] {
        let privacy = (d as f64 * budget.log_inv_delta()).sqrt() / n as f64;
        let stat = 1.0 / (n as f64).sqrt();
        assert_eq!(bounds::rate(n, d, budget), privacy.max(stat));
        assert_eq!(bounds::privacy_dominates(n, d, budget), privacy >= stat);
    }
    assert!(!bounds::privacy_dominates(n, 10, budget));
    assert!(bounds::privacy_dominates(n, 100, budget));
}
