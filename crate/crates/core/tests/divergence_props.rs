mod common;

use common::{function, measure, sparse_measure};
use divbound_core::divergences::{chi_square, divergence, dual_psi, fenchel_gap, product_dual_identity_check, total_variation};
use divbound_core::spaces::random_measure;
use divbound_core::{DiscreteMeasure, DivergenceKind, FiniteMetricSpace, RealFunction, SeededRng};
use proptest::prelude::*;

fn pair(max: usize) -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
    (2..=max).prop_flat_map(|n| (sparse_measure(n), measure(n)))
}

fn kernel(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), n).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let t: f64 = r.iter().sum::<f64>() + 1e-3;
                let mut r: Vec<f64> = r.iter().map(|v| v / t).collect();
                let rest = 1.0 - r.iter().sum::<f64>();
                r[0] += rest;
                r
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn nonnegativity_and_chi2_form_identity((nu, mu) in pair(9)) {
        prop_assert!(divergence(DivergenceKind::Kl, &nu, &mu).unwrap().value >= -1e-15);
        prop_assert!(total_variation(&nu, &mu).unwrap() >= 0.0);
        let chi = chi_square(&nu, &mu).unwrap();
        prop_assert!(chi >= 0.0);
        let form = divergence(DivergenceKind::ChiSquareForm, &nu, &mu).unwrap().value;
        prop_assert!((form - (chi + 1.0) / 2.0).abs() <= 1e-12 * (1.0 + chi));
    }

    #[test]
    fn kl_below_log_one_plus_chi2((nu, mu) in pair(9)) {
        let kl = divergence(DivergenceKind::Kl, &nu, &mu).unwrap().value;
        let chi = chi_square(&nu, &mu).unwrap();
        prop_assert!(kl <= (1.0 + chi).ln() + 1e-12);
    }

    #[test]
    fn data_processing(
        (nu, mu, t) in (2usize..7, 2usize..7).prop_flat_map(|(n, m)| (measure(n), measure(n), kernel(n, m)))
    ) {
        let (tnu, tmu) = (nu.push_forward(&t).unwrap(), mu.push_forward(&t).unwrap());
        for kind in [DivergenceKind::Kl, DivergenceKind::Tv, DivergenceKind::ChiSquareForm] {
            let before = divergence(kind, &nu, &mu).unwrap().value;
            let after = divergence(kind, &tnu, &tmu).unwrap().value;
            prop_assert!(after <= before + 1e-10, "{kind}: {after} > {before}");
        }
        prop_assert!(chi_square(&tnu, &tmu).unwrap() <= chi_square(&nu, &mu).unwrap() + 1e-10);
        prop_assert!(total_variation(&tnu, &tmu).unwrap() <= total_variation(&nu, &mu).unwrap() + 1e-12);
    }

    #[test]
    fn generators_are_convex(alpha in prop_oneof![0.1f64..0.95, 1.05f64..6.0]) {
        let kinds = [
            DivergenceKind::Kl,
            DivergenceKind::Tv,
            DivergenceKind::ChiSquare,
            DivergenceKind::ChiSquareForm,
            DivergenceKind::hellinger(alpha).unwrap(),
        ];
        for kind in kinds {
            let xs: Vec<f64> = (0..400).map(|k| k as f64 * 0.01).collect();
            for w in xs.windows(3) {
                let second = kind.generator(w[0]) - 2.0 * kind.generator(w[1]) + kind.generator(w[2]);
                // x^α/α with α < 1 is concave, the other generators convex
                if let DivergenceKind::Hellinger { alpha } = kind {
                    if alpha < 1.0 {
                        prop_assert!(second <= 1e-9);
                        continue;
                    }
                }
                prop_assert!(second >= -1e-9, "{kind} at {}", w[1]);
            }
        }
    }

    #[test]
    fn product_identity_chi2_form(
        (mu, xi, f) in (2usize..5, 2usize..5).prop_flat_map(|(m, k)| (measure(m), measure(k), function(m * k)))
    ) {
        prop_assert!(product_dual_identity_check(DivergenceKind::ChiSquareForm, &mu, &xi, &f).unwrap() <= 1e-12);
        prop_assert!(product_dual_identity_check(DivergenceKind::Kl, &mu, &xi, &f).unwrap() <= 1e-10);
    }
}

/// `high`-precision Fenchel gap: exact-ish sums in the log-ratio form.
fn gap_oracle(mu: &[f64], nu: &[f64], f: &[f64]) -> f64 {
    let kl: f64 = nu.iter().zip(mu).filter(|(n, _)| **n > 0.0).map(|(n, m)| n * (n / m).ln()).sum();
    let nu_f: f64 = nu.iter().zip(f).map(|(a, b)| a * b).sum();
    let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let psi = top + mu.iter().zip(f).map(|(m, v)| m * (v - top).exp()).sum::<f64>().ln();
    kl - (nu_f - psi)
}

#[test]
fn fenchel_gap_sweep() {
    let mut rng = SeededRng::new(2024);
    let space = FiniteMetricSpace::line(7).unwrap();
    let mut flagged = 0;
    for _ in 0..10_000 {
        let mu = random_measure(&space, &mut rng, 0.01).unwrap();
        let nu = random_measure(&space, &mut rng, 0.0).unwrap();
        let f = RealFunction::new((0..7).map(|_| rng.uniform_in(-4.0, 4.0)).collect()).unwrap();
        for kind in [DivergenceKind::Kl, DivergenceKind::ChiSquareForm, DivergenceKind::Hellinger { alpha: 3.0 }] {
            let gap = fenchel_gap(kind, &mu, &nu, &f).unwrap();
            if gap < -1e-9 {
                flagged += 1;
                if kind == DivergenceKind::Kl {
                    assert!(gap_oracle(mu.weights(), nu.weights(), f.values()) >= -1e-9);
                }
            }
        }
    }
    assert_eq!(flagged, 0);
}

#[test]
fn kl_dual_of_constant_shift() {
    let mu = DiscreteMeasure::probability(vec![0.25, 0.25, 0.5]).unwrap();
    let f = RealFunction::new(vec![1.0, -2.0, 0.5]).unwrap();
    let shifted = f.map(|v| v + 3.0);
    let a = dual_psi(DivergenceKind::Kl, &mu, &f).unwrap();
    let b = dual_psi(DivergenceKind::Kl, &mu, &shifted).unwrap();
    assert!((b - a - 3.0).abs() < 1e-14);
}
