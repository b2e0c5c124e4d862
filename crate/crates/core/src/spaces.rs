//! Finite metric spaces, measures and functions on them, and the elementary
//! statistics the inequality engine is built from.
//!
//! Measures and functions store one entry per point; two of them "share a
//! space" when they have the same number of points. Operations that need the
//! metric take the [`FiniteMetricSpace`] explicitly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::numeric::{compensated_sum, weighted_log_sum_exp};
use crate::{Error, Result, SeededRng, Tolerances};

/// A finite point set with a validated metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    // row-major, len = n * n
    metric: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Builds a space from labels and a square metric matrix.
    ///
    /// The matrix must be symmetric with an exactly zero diagonal, strictly
    /// positive off-diagonal entries and satisfy the triangle inequality up to
    /// [`Tolerances::triangle`].
    pub fn new(labels: Vec<String>, metric: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if metric.len() != n {
            return Err(Error::InvalidMetric(format!(
                "{} labels but {} metric rows",
                n,
                metric.len()
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in metric.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(labels, flat)
    }

    /// Builds a space from a row-major metric.
    pub fn from_flat(labels: Vec<String>, metric: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::DegenerateSpace { needed: 1, got: 0 });
        }
        if metric.len() != n * n {
            return Err(Error::InvalidMetric(format!("expected {} entries, got {}", n * n, metric.len())));
        }
        validate_metric(n, &metric, Tolerances::DEFAULT.triangle)?;
        Ok(Self { labels, metric })
    }

    /// Builds a space whose distance is computed by `dist(i, j)`.
    pub fn from_fn<F: Fn(usize, usize) -> f64>(n: usize, dist: F) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let mut metric = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                metric.push(if i == j { 0.0 } else { dist(i, j) });
            }
        }
        Self::from_flat(labels, metric)
    }

    /// The points `0, 1, …, n-1` on the real line with `d(i, j) = |i - j|`.
    pub fn line(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| (i as f64 - j as f64).abs())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric[i * self.len() + j]
    }

    /// Row-major metric matrix.
    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn diameter(&self) -> f64 {
        self.metric.iter().copied().fold(0.0, f64::max)
    }
}

fn validate_metric(n: usize, m: &[f64], triangle_tol: f64) -> Result<()> {
    for i in 0..n {
        for j in 0..n {
            let d = m[i * n + j];
            if !d.is_finite() {
                return Err(Error::InvalidMetric(format!("d({i},{j}) is not finite")));
            }
            if i == j {
                if d != 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{i}) = {d}, expected 0")));
                }
            } else {
                if d <= 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {d} must be positive")));
                }
                if d != m[j * n + i] {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m[i * n + k] > m[i * n + j] + m[j * n + k] + triangle_tol {
                    return Err(Error::InvalidMetric(format!("triangle inequality fails for ({i},{j},{k})")));
                }
            }
        }
    }
    Ok(())
}

/// Nonnegative weights, one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// A nonnegative (not necessarily normalized) measure.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateSpace { needed: 1, got: 0 });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(Self { weights })
    }

    /// A probability measure: nonnegative weights summing to one.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(weights)?;
        m.require_probability()?;
        Ok(m)
    }

    /// Probability measure on `space` (length-checked).
    pub fn on(space: &FiniteMetricSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::SpaceMismatch { left: space.len(), right: weights.len() });
        }
        Self::probability(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: alloc::vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut weights = alloc::vec![0.0; n];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= Tolerances::DEFAULT.probability_sum
    }

    pub fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability { sum: self.total() })
        }
    }

    /// Indicator of the points carrying positive mass.
    pub fn support(&self) -> Vec<bool> {
        self.weights.iter().map(|&w| w > 0.0).collect()
    }

    /// True when every point charged by `self` is charged by `other`.
    pub fn absolutely_continuous_wrt(&self, other: &DiscreteMeasure) -> bool {
        self.weights.iter().zip(&other.weights).all(|(&a, &b)| a == 0.0 || b > 0.0)
    }

    /// Product measure on `self × other`, index `i * other.len() + j`.
    pub fn product(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for &a in &self.weights {
            weights.extend(other.weights.iter().map(|&b| a * b));
        }
        DiscreteMeasure { weights }
    }

    /// Push-forward through a row-stochastic kernel (`kernel[i][j]` = P(j | i)).
    pub fn push_forward(&self, kernel: &[Vec<f64>]) -> Result<DiscreteMeasure> {
        if kernel.len() != self.len() {
            return Err(Error::SpaceMismatch { left: self.len(), right: kernel.len() });
        }
        let out_len = kernel.first().map_or(0, Vec::len);
        let mut out = alloc::vec![0.0; out_len];
        for (w, row) in self.weights.iter().zip(kernel) {
            if row.len() != out_len {
                return Err(Error::SpaceMismatch { left: out_len, right: row.len() });
            }
            for (o, k) in out.iter_mut().zip(row) {
                *o += w * k;
            }
        }
        DiscreteMeasure::new(out)
    }
}

/// A finite real value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction {
    values: Vec<f64>,
}

impl RealFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateSpace { needed: 1, got: 0 });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn on(space: &FiniteMetricSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::SpaceMismatch { left: space.len(), right: values.len() });
        }
        Self::new(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self { values: alloc::vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> RealFunction {
        RealFunction { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &RealFunction, b: f64) -> Result<RealFunction> {
        same_len(self.len(), other.len())?;
        Ok(RealFunction {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    /// `self - μ(self)`.
    pub fn centered(&self, mu: &DiscreteMeasure) -> Result<RealFunction> {
        let m = expectation(mu, self)?;
        Ok(self.map(|v| v - m))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[inline]
pub(crate) fn same_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::SpaceMismatch { left, right })
    }
}

/// `μ(f) = Σᵢ μᵢ f(i)`.
pub fn expectation(mu: &DiscreteMeasure, f: &RealFunction) -> Result<f64> {
    same_len(mu.len(), f.len())?;
    Ok(mu.weights.iter().zip(&f.values).map(|(w, v)| w * v).sum())
}

/// Central moment of order `k`: `μ((f - μf)^k)`, which for even `k` is `μ(|f - μf|^k)`.
pub fn central_moment(mu: &DiscreteMeasure, f: &RealFunction, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("moment order must be at least 1".into()));
    }
    let m = expectation(mu, f)?;
    Ok(mu
        .weights
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * (v - m).powi(k as i32))
        .sum())
}

/// Centered cumulant generating function `log μ(exp(λ(f - μf)))`.
pub fn cgf(mu: &DiscreteMeasure, f: &RealFunction, lambda: f64) -> Result<f64> {
    let m = expectation(mu, f)?;
    let exponents: Vec<f64> = f.values.iter().map(|v| lambda * (v - m)).collect();
    if exponents.iter().all(|x| x.abs() <= 0.5) {
        // near λ = 0 the value is O(λ²); expm1/log1p keep its relative accuracy
        let excess = compensated_sum(
            mu.weights
                .iter()
                .zip(&exponents)
                .map(|(w, x)| w * x.exp_m1())
                .chain(mu.weights.iter().copied())
                .chain(core::iter::once(-1.0)),
        );
        return Ok(excess.ln_1p());
    }
    Ok(weighted_log_sum_exp(&mu.weights, &exponents))
}

/// `maxᵢ≠ⱼ |f(i) - f(j)| / d(i, j)`.
pub fn lipschitz_seminorm(space: &FiniteMetricSpace, f: &RealFunction) -> Result<f64> {
    same_len(space.len(), f.len())?;
    let n = space.len();
    if n < 2 {
        return Err(Error::DegenerateSpace { needed: 2, got: n });
    }
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max((f.values[i] - f.values[j]).abs() / space.distance(i, j));
        }
    }
    Ok(best)
}

/// Largest 1-Lipschitz minorant of `f`: `g(i) = minⱼ f(j) + d(i, j)`.
pub fn lipschitz_projection(space: &FiniteMetricSpace, f: &RealFunction) -> Result<RealFunction> {
    same_len(space.len(), f.len())?;
    let n = space.len();
    let values = (0..n)
        .map(|i| (0..n).map(|j| f.values[j] + space.distance(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(RealFunction { values })
}

/// Random probability measure with every weight at least `floor`.
///
/// Draws a flat Dirichlet vector and mixes it with the uniform measure:
/// `ν ← (1 - n·floor)·ν + floor`.
pub fn random_measure(space: &FiniteMetricSpace, rng: &mut SeededRng, floor: f64) -> Result<DiscreteMeasure> {
    random_weights(&alloc::vec![true; space.len()], rng, floor)
}

/// Like [`random_measure`] but only charges the points flagged in `support`;
/// the floor applies to those points.
pub fn random_weights(support: &[bool], rng: &mut SeededRng, floor: f64) -> Result<DiscreteMeasure> {
    let points = support.iter().filter(|&&s| s).count();
    if points == 0 {
        return Err(Error::DegenerateSpace { needed: 1, got: 0 });
    }
    if !(floor >= 0.0 && floor * (points as f64) < 1.0) {
        return Err(Error::InvalidFloor { floor, points });
    }
    let mut weights: Vec<f64> = support
        .iter()
        .map(|&s| if s { rng.exponential() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let keep = 1.0 - points as f64 * floor;
    for (w, &s) in weights.iter_mut().zip(support) {
        if s {
            *w = keep * (*w / total) + floor;
        }
    }
    Ok(DiscreteMeasure { weights })
}
