use dpsco::losses::euclidean_norm_loss;
use dpsco::nsgd::derive_nsgd_params;
use dpsco::smoothing::{envelope, prox_exact_norm};
use dpsco::{ConvexDomain, Example, Loss, PrivacyBudget, ProxMode, RngStream};
use nalgebra::DVector;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-3.0f64..3.0, 3).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn projection_is_non_expansive(u in vec3(), w in vec3(), radius in 0.1f64..2.0) {
        let ball = ConvexDomain::centered_ball(3, radius).unwrap();
        let pu = ball.project(&u).unwrap();
        let pw = ball.project(&w).unwrap();
        prop_assert!((&pu - &pw).norm() <= (&u - &w).norm() + 1e-12);
        prop_assert!(ball.contains(&pu, 1e-12));
    }

    #[test]
    fn envelope_sits_below_the_loss(w in vec3(), z in vec3(), beta in 0.2f64..50.0) {
        let w = w / 6.0;
        let z = Example::point(z / 6.0);
        let loss = euclidean_norm_loss(3);
        let domain = ConvexDomain::centered_ball(3, 1.0).unwrap();
        let env = envelope(&loss, &z, beta, &w, 1e-3, &domain, ProxMode::ExactOracle).unwrap();
        let f = loss.value(&w, &z);
        prop_assert!(env.value <= f + 1e-12);
        prop_assert!(f <= env.value + loss.lipschitz().powi(2) / (2.0 * beta) + 1e-12);
        prop_assert!(env.grad.norm() <= 2.0 * loss.lipschitz() + 1e-12);
    }

    #[test]
    fn soft_threshold_lies_between_point_and_center(w in vec3(), z in vec3(), beta in 0.1f64..10.0) {
        let p = prox_exact_norm(&w, &z, beta);
        prop_assert!(((&p - &z).norm() + (&w - &p).norm() - (&w - &z).norm()).abs() < 1e-9);
    }

    #[test]
    fn noise_scale_tracks_iterations(n in 200usize..5000, d in 1usize..30, eps in 0.05f64..1.0) {
        let budget = PrivacyBudget::new(eps, 1.0 / ((n * n) as f64 * 10.0)).unwrap();
        let p = derive_nsgd_params(n, d, budget, 1.0, 1.0).unwrap();
        let expected = 8.0 * budget.log_inv_delta() / (eps * eps);
        let got = p.noise_variance * (n * n) as f64 / p.iterations as f64;
        prop_assert!((got - expected).abs() <= 1e-9 * expected);
        prop_assert!(p.batch_size >= 1 && p.batch_size <= n);
        prop_assert!(p.iterations >= 1);
    }

    #[test]
    fn streams_replay(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let s = RngStream::new(seed).child(a).child(b);
        let t = RngStream::new(seed).child(a).child(b);
        prop_assert_eq!(s.seed(), t.seed());
        prop_assert_ne!(s.child(0).seed(), s.child(1).seed());
    }
}
