use divbound_core::learning::{
    bound_report, chi2_bound, gen_err_exact, gibbs_kernel, mi_bound, mutual_information, per_sample_mutual_information,
};
use divbound_core::{BoundSelection, ConvexRate, DiscreteMeasure, GibbsAlgorithm, LearningProblem};
use proptest::prelude::*;

const GAMMAS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 10.0, 1e6];

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn problem(nz: usize, nh: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (
        prop::collection::vec(prop::collection::vec(0.0..1.0f64, nz), nh),
        prop::collection::vec(0.05..1.0f64, nz),
    )
}

fn configs() -> impl Strategy<Value = (LearningProblem, GibbsAlgorithm)> {
    (1usize..=4, 1usize..=5, 1u32..=3, 0usize..GAMMAS.len())
        .prop_flat_map(|(nz, nh, n, g)| (problem(nz, nh), Just((nz, nh, n, g))))
        .prop_map(|((loss, w), (nz, nh, n, g))| {
            let total: f64 = w.iter().sum();
            let p_z = DiscreteMeasure::probability(w.iter().map(|v| v / total).collect()).unwrap();
            let p = LearningProblem::new(labels("z", nz), labels("h", nh), loss, p_z, n).unwrap();
            (p, GibbsAlgorithm::uniform(nh, GAMMAS[g]).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 250, ..ProptestConfig::default() })]

    #[test]
    fn checked_bounds_dominate((problem, alg) in configs()) {
        let report = bound_report(&problem, &alg, BoundSelection::ALL).unwrap();
        prop_assert!(report.violations(1e-12).is_empty(), "{:?}", report);
        prop_assert!(report.k_check);
        prop_assert!((report.generic_mi - report.mi_bound.unwrap().value).abs() <= 1e-12);
        prop_assert!((report.generic_chi2 - report.chi2_bound.unwrap().value).abs() <= 1e-12);
        // KL per-sample bound sits below the joint one; squared, so rounding in I is not amplified
        let (ismi, mi) = (report.ismi_bound.unwrap().value, report.mi_bound.unwrap().value);
        prop_assert!(ismi * ismi <= mi * mi + 1e-12, "{} vs {}", ismi, mi);
    }

    #[test]
    fn marginals_and_chain_rule((problem, alg) in configs()) {
        let law = gibbs_kernel(&problem, &alg).unwrap();
        prop_assert!(law.marginal_residual() <= 1e-12);
        let product = law.product();
        for s in 0..law.p_s().len() {
            for h in 0..law.p_h().len() {
                let w = product.weights()[s * law.p_h().len() + h];
                prop_assert!((w - law.p_s().weights()[s] * law.p_h().weights()[h]).abs() <= 1e-12);
            }
        }
        let info = mutual_information(&law).unwrap();
        let per_sample = per_sample_mutual_information(&law).unwrap();
        prop_assert!(per_sample.iter().sum::<f64>() <= info + 1e-12);
        // iid samples: every position carries the same information
        for i in &per_sample {
            prop_assert!((i - per_sample[0]).abs() <= 1e-12);
        }
    }
}

#[test]
fn independent_learner_has_no_gap() {
    let p = LearningProblem::new(
        labels("z", 3),
        labels("h", 4),
        vec![vec![0.1, 0.9, 0.4], vec![0.7, 0.2, 0.3], vec![1.0, 0.0, 0.5], vec![0.3, 0.3, 0.8]],
        DiscreteMeasure::probability(vec![0.2, 0.5, 0.3]).unwrap(),
        4,
    )
    .unwrap();
    let law = gibbs_kernel(&p, &GibbsAlgorithm::uniform(4, 0.0).unwrap()).unwrap();
    assert!(gen_err_exact(&law, &p).abs() <= 1e-12);
    assert!(mutual_information(&law).unwrap().abs() <= 1e-12);
    assert!(mi_bound(&law, &p).unwrap() <= 1e-6);
    // √(2K/n) survives through the +1 offset
    let k = p.max_variance().unwrap();
    assert!((chi2_bound(&law, &p).unwrap() - (2.0 * k / 4.0).sqrt()).abs() < 1e-12);
}

#[test]
fn mi_bound_with_frozen_information_scales_as_inverse_root_n() {
    let phi = ConvexRate::quadratic(0.25).unwrap();
    let info = 0.3;
    let at = |n: u32| phi.scale_by_n(n).unwrap().inverse_conjugate(info).value;
    for n in [1u32, 2, 4, 8, 16, 32] {
        let expected = (2.0 * 0.25 * info / n as f64).sqrt();
        assert!((at(n) - expected).abs() <= 1e-10 * expected);
        assert!(at(2 * n) < at(n));
        assert!((at(4 * n) * 2.0 - at(n)).abs() <= 1e-10);
    }
}

#[test]
fn erm_gap_is_bounded_for_every_sample_size() {
    // two hypotheses, each wrong on one point
    let loss = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    for n in 1..=6 {
        let p = LearningProblem::new(labels("z", 2), labels("h", 2), loss.clone(), DiscreteMeasure::uniform(2), n).unwrap();
        for gamma in GAMMAS {
            let selection = BoundSelection { cmi: n <= 3, ..BoundSelection::ALL };
            let report = bound_report(&p, &GibbsAlgorithm::uniform(2, gamma).unwrap(), selection).unwrap();
            assert!(report.violations(1e-12).is_empty(), "n={n} gamma={gamma}: {report:?}");
            assert!(report.gen_err <= 1e-15, "training risk should not exceed the true risk");
        }
    }
}
