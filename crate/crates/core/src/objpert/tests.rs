use nalgebra::DVector;

use super::*;
use crate::domain::ConvexDomain;
use crate::erm::empirical_gradient;
use crate::losses::{logistic_glm_loss, squared_distance_loss, Linear, SyntheticDistribution};
use crate::rng::{uniform_ball, RngStream};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn headline() -> PrivacyBudget {
    PrivacyBudget::new(1.0, 1e-6).unwrap()
}

#[test]
fn headline_parameters() {
    let exact = derive_objpert_params(1000, 10, headline(), 1.0, 1.0, Variant::Exact).unwrap();
    let log_term = 1e6f64.ln();
    let inner = 2e-3 + 40.0 * log_term / 1e6;
    assert!((inner - 2e-3 - 5.52620e-4).abs() < 1e-9);
    assert!((exact.lambda - 2.0 * inner.sqrt()).abs() < 1e-15);
    assert!((exact.lambda - 0.101047).abs() < 1e-6);
    assert!((exact.alpha_opt - exact.lambda / 1e6).abs() < 1e-20);
    assert!((exact.alpha_opt - 1.01047e-7).abs() < 1e-12);
    assert!((exact.sigma2_out - 40.0 * log_term / 1e6).abs() < 1e-15);
    assert!((exact.sigma2_out - 5.52620e-4).abs() < 1e-9);
    assert!((exact.sigma2_obj - 138.155).abs() < 1e-3);
    let app = derive_objpert_params(1000, 10, headline(), 1.0, 1.0, Variant::Approximate).unwrap();
    assert!((app.sigma2_obj - 276.310).abs() < 1e-3);
    assert_eq!(app.lambda, exact.lambda);
}

#[test]
fn lambda_halves_when_n_quadruples() {
    let b = PrivacyBudget::new(1.0, 1e-14).unwrap();
    let small = derive_objpert_params(1_000_000, 1, b, 1.0, 1.0, Variant::Exact).unwrap();
    let large = derive_objpert_params(4_000_000, 1, b, 1.0, 1.0, Variant::Exact).unwrap();
    assert!((large.lambda / small.lambda - 0.5).abs() < 1e-4);
}

#[test]
fn preconditions_for_logistic_and_squared() {
    let lambda = 0.101;
    let logistic = logistic_glm_loss(10);
    let report = check_objpert_preconditions(&logistic, 1000, 1.0, lambda, &[]).unwrap();
    assert!(report.smoothness_ok && report.rank_ok && report.certified);

    let sq = squared_distance_loss(10, 1.0, 1.0).unwrap();
    let pair = (DVector::zeros(10), crate::loss::Example::point(DVector::zeros(10)));
    let report = check_objpert_preconditions(&sq, 1000, 1.0, lambda, &[pair]).unwrap();
    assert!(report.smoothness_ok);
    assert!(!report.rank_ok);
    assert!(!report.det_condition_ok);
    assert!(!report.certified);

    // beta = eps * n * lambda exactly: 0.25 = 1 * 1024 * 2^-12
    let report = check_objpert_preconditions(&logistic, 1024, 1.0, 2f64.powi(-12), &[]).unwrap();
    assert!(report.smoothness_ok);
    let report = check_objpert_preconditions(&logistic, 1023, 1.0, 2f64.powi(-12), &[]).unwrap();
    assert!(!report.smoothness_ok);
}

#[test]
fn determinant_of_rank_one_hessian() {
    let loss = logistic_glm_loss(4);
    let lambda = derive_objpert_params(1000, 10, headline(), 1.0, 1.0, Variant::Exact).unwrap().lambda;
    let x = v(&[0.6, 0.0, 0.8, 0.0]);
    let z = crate::loss::Example::labeled(x, 1.0);
    let w = DVector::zeros(4);
    let det = hessian_determinant(&loss, lambda, &w, &z).unwrap();
    assert!((det - (1.0 + 0.25 / lambda)).abs() < 1e-12);
    assert!((det - 3.47410).abs() < 1e-5);
    assert!(det > 0.5f64.exp());
    assert!(!hessian_det_condition_check(&loss, lambda, 1.0, &[(w, z)]).unwrap());

    let lin = Linear::new(4, 1.0);
    let pair = (v(&[0.1, 0.2, 0.0, 0.0]), crate::loss::Example::point(v(&[1.0, 0.0, 0.0, 0.0])));
    assert_eq!(hessian_determinant(&lin, lambda, &pair.0, &pair.1).unwrap(), 1.0);
    assert!(hessian_det_condition_check(&lin, lambda, 1.0, &[pair]).unwrap());
}

#[test]
fn perturbed_quadratic_in_one_dimension() {
    let sq = squared_distance_loss(1, 1.0, 1.0).unwrap();
    let data = Dataset::from_points([v(&[0.25]), v(&[0.75])]).unwrap();
    let g = v(&[0.2]);
    let obj = PerturbedObjective::new(&sq, &data, &g, 0.25).unwrap();
    // grid refinement around the closed form 0.4 / 1.5
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    for _ in 0..12 {
        let step = (hi - lo) / 100.0;
        let best = (0..=100)
            .map(|i| lo + i as f64 * step)
            .min_by(|a, b| obj.value(&v(&[*a])).partial_cmp(&obj.value(&v(&[*b]))).unwrap())
            .unwrap();
        lo = best - step;
        hi = best + step;
    }
    let grid = 0.5 * (lo + hi);
    assert!((grid - 0.4 / 1.5).abs() < 1e-8);
    let domain = ConvexDomain::centered_ball(1, 1.0).unwrap();
    let solved = minimize_perturbed(&obj, &domain, &v(&[0.0]), 1e-14).unwrap();
    assert!((solved.w[0] - 0.266667).abs() < 1e-6);
    assert!((solved.w[0] - 0.4 / 1.5).abs() < 1e-7);
    let (_, grad) = obj.value_and_grad(&solved.w).unwrap();
    assert!(grad.norm() < 1e-6);
}

#[test]
fn unperturbed_gradient_vanishes_at_erm() {
    let sq = squared_distance_loss(3, 1.0, 1.0).unwrap();
    let dist = SyntheticDistribution::ball_uniform_mean_estimation(v(&[0.2, 0.1, 0.0]), 1.0).unwrap();
    let data = dist.sample(50, &RngStream::new(1)).unwrap();
    let zero = DVector::zeros(3);
    let obj = PerturbedObjective::new(&sq, &data, &zero, 0.0).unwrap();
    let g = obj.gradient(&data.mean_x()).unwrap();
    assert!(g.norm() < 1e-15);
    assert!((g - empirical_gradient(&sq, &data, &data.mean_x()).unwrap()).norm() < 1e-15);
}

#[test]
fn strong_convexity_on_random_pairs() {
    let loss = logistic_glm_loss(5);
    let dist = SyntheticDistribution::logistic_pairs(v(&[0.5, 0.0, 0.0, 0.0, 0.0]), 1.0).unwrap();
    let data = dist.sample(40, &RngStream::new(3)).unwrap();
    let g = v(&[3.0, -1.0, 0.5, 2.0, 0.0]);
    let lambda = 0.1;
    let obj = PerturbedObjective::new(&loss, &data, &g, lambda).unwrap();
    let mut rng = RngStream::new(4).rng();
    for _ in 0..1000 {
        let u = uniform_ball(5, 1.0, &mut rng);
        let w = uniform_ball(5, 1.0, &mut rng);
        let (jw, gw) = obj.value_and_grad(&w).unwrap();
        let lower = jw + gw.dot(&(&u - &w)) + 0.5 * lambda * (&u - &w).norm_squared();
        assert!(obj.value(&u) >= lower - 1e-9);
    }
}

#[derive(Debug)]
struct Quadratic {
    anchors: Vec<f64>,
}

impl FiniteSum for Quadratic {
    fn len(&self) -> usize {
        self.anchors.len()
    }
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, w: &DVector<f64>) -> f64 {
        self.anchors.iter().map(|a| 0.5 * (w[0] - a).powi(2)).sum::<f64>() / self.len() as f64
    }
    fn component_gradient(&self, i: usize, w: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(v(&[w[0] - self.anchors[i]]))
    }
}

impl Quadratic {
    fn optimum(&self) -> f64 {
        let mean = self.anchors.iter().sum::<f64>() / self.len() as f64;
        self.value(&v(&[mean]))
    }
}

#[test]
fn svrg_single_component_is_gradient_descent() {
    let q = Quadratic { anchors: vec![0.3] };
    let domain = ConvexDomain::centered_ball(1, 10.0).unwrap();
    let cfg = SvrgConfig::new(1.0, 1.0).unwrap();
    assert_eq!(cfg.epoch_length, 20);
    let out = svrg(&q, &domain, &cfg, &v(&[2.0]), SvrgStop::Epochs(1), &RngStream::new(0)).unwrap();
    // w_{s+1} = w_s - 0.1 (w_s - 0.3), averaged over w_1..w_20
    let mut w = 2.0f64;
    let mut sum = 0.0;
    for _ in 0..20 {
        sum += w;
        w -= 0.1 * (w - 0.3);
    }
    assert!((out.w[0] - sum / 20.0).abs() < 1e-14);
    assert_eq!(out.grad_evals, 1 + 2 * 19 + 1);
}

#[test]
fn svrg_reaches_target_at_the_contraction_rate() {
    let mut rng = RngStream::new(8).rng();
    let anchors: Vec<f64> = (0..100).map(|_| uniform_ball(1, 1.0, &mut rng)[0]).collect();
    let q = Quadratic { anchors };
    let domain = ConvexDomain::centered_ball(1, 10.0).unwrap();
    let cfg = SvrgConfig::new(1.0, 1.0).unwrap();
    let start = v(&[3.0]);
    let gap0 = q.value(&start) - q.optimum();
    let alpha = 1e-7;
    let epochs = ((alpha / gap0).ln() / 0.9f64.ln()).ceil() as usize;
    let out = svrg(&q, &domain, &cfg, &start, SvrgStop::Epochs(epochs), &RngStream::new(9)).unwrap();
    assert!(q.value(&out.w) - q.optimum() <= alpha);
    assert_eq!(out.epochs, epochs);
    assert_eq!(out.gaps.len(), epochs + 1);
}

#[test]
fn objpert_exact_without_noise_is_regularized_erm() {
    let sq = squared_distance_loss(3, 1.0, 1.0).unwrap();
    let dist = SyntheticDistribution::ball_uniform_mean_estimation(v(&[0.3, 0.0, 0.1]), 1.0).unwrap();
    let data = dist.sample(100, &RngStream::new(2)).unwrap();
    let domain = ConvexDomain::centered_ball(3, 1.0).unwrap();
    let params = ObjPertParams {
        variant: Variant::Exact,
        lambda: 1e-6,
        sigma2_obj: 1.0,
        alpha_opt: 1e-6 / 1e4,
        sigma2_out: 0.0,
    };
    let opts = ObjPertOptions { noise_off: true, ..Default::default() };
    let out = run_objpert_exact(&sq, &data, &domain, &params, 1.0, &opts, &RngStream::new(5)).unwrap();
    assert!(out.non_private);
    let target = domain.project(&data.mean_x()).unwrap();
    assert!((out.w - target).norm() < 1e-5);
}

#[test]
fn objpert_rejects_loose_tolerance() {
    let loss = logistic_glm_loss(2);
    let dist = SyntheticDistribution::logistic_pairs(v(&[0.5, 0.0]), 1.0).unwrap();
    let data = dist.sample(100, &RngStream::new(2)).unwrap();
    let domain = ConvexDomain::centered_ball(2, 1.0).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
    let params = derive_objpert_params(100, 2, budget, 1.0, 1.0, Variant::Exact).unwrap();
    let opts = ObjPertOptions { tol: Some(params.alpha_opt), ..Default::default() };
    assert!(matches!(
        run_objpert_exact(&loss, &data, &domain, &params, 1.0, &opts, &RngStream::new(1)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn approximate_matches_exact_without_noise() {
    let loss = logistic_glm_loss(3);
    let dist = SyntheticDistribution::logistic_pairs(v(&[0.5, 0.2, 0.0]), 1.0).unwrap();
    let data = dist.sample(200, &RngStream::new(6)).unwrap();
    let domain = ConvexDomain::centered_ball(3, 1.0).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
    let mut exact = derive_objpert_params(200, 3, budget, 1.0, 1.0, Variant::Exact).unwrap();
    let mut app = derive_objpert_params(200, 3, budget, 1.0, 1.0, Variant::Approximate).unwrap();
    exact.alpha_opt = 1e-12;
    app.alpha_opt = 1e-12;
    let opts = ObjPertOptions { noise_off: true, sensitivity_audit: true, ..Default::default() };
    let a = run_objpert_exact(&loss, &data, &domain, &exact, 1.0, &opts, &RngStream::new(1)).unwrap();
    let b = run_objpert_app(&loss, &data, &domain, &app, 1.0, &opts, &RngStream::new(1)).unwrap();
    assert!((a.w - b.w).norm() <= (2.0 * 1e-12 / app.lambda).sqrt());
    assert!(b.sensitivity_gap.unwrap() <= (2.0 * 1e-12 / app.lambda).sqrt());
    assert!(b.certified);
}

#[test]
fn approximate_sensitivity_audit() {
    let loss = logistic_glm_loss(4);
    let dist = SyntheticDistribution::logistic_pairs(v(&[0.5, 0.0, 0.0, 0.0]), 1.0).unwrap();
    let domain = ConvexDomain::centered_ball(4, 1.0).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let params = derive_objpert_params(300, 4, budget, 1.0, 1.0, Variant::Approximate).unwrap();
    let opts = ObjPertOptions { sensitivity_audit: true, ..Default::default() };
    let limit = (2.0 * params.alpha_opt / params.lambda).sqrt();
    for seed in 0..10 {
        let root = RngStream::new(seed);
        let data = dist.sample(300, &root.child(1)).unwrap();
        let out = run_objpert_app(&loss, &data, &domain, &params, 1.0, &opts, &root.child(2)).unwrap();
        assert!(out.sensitivity_gap.unwrap() <= limit);
        assert!(out.achieved_tolerance.unwrap() <= params.alpha_opt);
        assert!(domain.contains(&out.w, 1e-12));
    }
}
