//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use dpsco::{ConvexDomain, Dataset, DistributionKind, Loss, PrivacyBudget, RngStream, SyntheticDistribution};

pub struct Fixture {
    pub loss: Arc<dyn Loss>,
    pub data: Dataset,
    pub domain: ConvexDomain,
    pub budget: PrivacyBudget,
}

/// `n` draws from `kind` in dimension `d` on the unit ball, at `(1, 1e-6)`.
pub fn fixture(kind: DistributionKind, n: usize, d: usize) -> Fixture {
    let dist = SyntheticDistribution::from_name(kind, d, 0.5, 1.0).expect("valid benchmark");
    Fixture {
        loss: dist.natural_loss(1.0).expect("valid radius"),
        data: dist.sample(n, &RngStream::new(1)).expect("sampling"),
        domain: ConvexDomain::centered_ball(d, 1.0).expect("valid radius"),
        budget: PrivacyBudget::new(1.0, 1e-6).expect("valid budget"),
    }
}
