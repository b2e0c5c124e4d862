#![allow(dead_code)]

use divbound_core::{DiscreteMeasure, FiniteMetricSpace, RealFunction};
use proptest::prelude::*;

/// Strictly positive probability vector of length `n`.
pub fn measure(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let total: f64 = w.iter().sum();
        DiscreteMeasure::probability(w.iter().map(|v| v / total).collect()).unwrap()
    })
}

/// Probability vector that may vanish on some points (but not all).
pub fn sparse_measure(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (prop::collection::vec(0.0f64..1.0, n), prop::collection::vec(any::<bool>(), n), 0..n).prop_map(|(w, keep, anchor)| {
        let mut w: Vec<f64> = w.iter().zip(&keep).map(|(v, k)| if *k { *v } else { 0.0 }).collect();
        w[anchor] += 0.5;
        let total: f64 = w.iter().sum();
        DiscreteMeasure::probability(w.iter().map(|v| v / total).collect()).unwrap()
    })
}

pub fn function(n: usize) -> impl Strategy<Value = RealFunction> {
    prop::collection::vec(-3.0f64..3.0, n).prop_map(|v| RealFunction::new(v).unwrap())
}

/// Random metric on `n` points: shortest-path closure of random edge lengths.
pub fn metric_space(n: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop::collection::vec(0.2f64..3.0, n * n).prop_map(move |raw| shortest_paths(n, &raw))
}

pub fn shortest_paths(n: usize, raw: &[f64]) -> FiniteMetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i][j] = raw[i.min(j) * n + i.max(j)];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    FiniteMetricSpace::new(labels, d).unwrap()
}

pub fn space_and_pair(max_points: usize) -> impl Strategy<Value = (FiniteMetricSpace, DiscreteMeasure, DiscreteMeasure)> {
    (2..=max_points).prop_flat_map(|n| (metric_space(n), sparse_measure(n), sparse_measure(n)))
}
