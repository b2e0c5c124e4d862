mod common;

use std::time::Instant;

use common::{measure, metric_space, space_and_pair};
use divbound_core::transport::{w1_dual, wasserstein};
use divbound_core::DiscreteMeasure;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strong_duality_and_feasibility((space, mu, nu) in space_and_pair(10)) {
        let primal = wasserstein(&space, 1.0, &mu, &nu).unwrap();
        let dual = w1_dual(&space, &mu, &nu).unwrap();
        prop_assert!((primal.distance - dual.distance).abs() <= 1e-8);
        prop_assert!(primal.duality_gap <= 1e-8);
        prop_assert!(primal.plan.marginal_residual(&mu, &nu) <= 1e-9);
        prop_assert!(primal.plan.matrix().iter().all(|v| *v >= 0.0));
        let f = dual.dual_potential.unwrap();
        prop_assert!(divbound_core::spaces::lipschitz_seminorm(&space, &f).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn metric_axioms(
        (space, a, b, c) in (2usize..8).prop_flat_map(|n| (metric_space(n), measure(n), measure(n), measure(n)))
    ) {
        let w = |x: &DiscreteMeasure, y: &DiscreteMeasure| wasserstein(&space, 1.0, x, y).unwrap().distance;
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() <= 1e-9);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-8);
        prop_assert!(w(&a, &a).abs() <= 1e-12);
    }

    #[test]
    fn order_monotonicity((space, mu, nu) in space_and_pair(8)) {
        let w1 = wasserstein(&space, 1.0, &mu, &nu).unwrap();
        let w2 = wasserstein(&space, 2.0, &mu, &nu).unwrap();
        prop_assert!(w1.distance <= w2.distance + 1e-9);
        prop_assert!(w2.duality_gap <= 1e-8);
        prop_assert!(w2.plan.marginal_residual(&mu, &nu) <= 1e-9);
    }
}

#[test]
fn distance_zero_iff_equal_marginals() {
    let space = divbound_core::FiniteMetricSpace::line(4).unwrap();
    let mu = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let nu = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3 + 1e-6, 0.4 - 1e-6]).unwrap();
    assert!(wasserstein(&space, 1.0, &mu, &mu).unwrap().distance == 0.0);
    assert!(wasserstein(&space, 1.0, &mu, &nu).unwrap().distance > 0.0);
}

#[test]
fn sixty_four_points_solve_quickly() {
    let space = divbound_core::FiniteMetricSpace::from_fn(64, |i, j| ((i as f64) - (j as f64)).abs().sqrt()).unwrap();
    let mut rng = divbound_core::SeededRng::new(5);
    let mu = divbound_core::spaces::random_measure(&space, &mut rng, 0.0).unwrap();
    let nu = divbound_core::spaces::random_measure(&space, &mut rng, 0.0).unwrap();
    let start = Instant::now();
    let r = wasserstein(&space, 1.0, &mu, &nu).unwrap();
    assert!(r.duality_gap <= 1e-8, "gap {}", r.duality_gap);
    assert!(start.elapsed().as_secs() < 60);
}
