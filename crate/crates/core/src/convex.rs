//! Rate functions `φ(λ)` and their conjugates.
//!
//! A [`ConvexRate`] is an even convex function of `λ` with `φ(0) = 0`. Its
//! [`ConjugateRate`] exposes `φ*` together with the generalized inverse
//! `(φ*)⁻¹(t) = inf{s ≥ 0 : φ*(s) ≥ t}`, which is what turns a bound on a dual
//! functional into a bound on a difference of expectations.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::numeric::{golden_max, log_spaced};
use crate::{Error, Result, Tolerances};

/// Lower end of the default numeric-conjugation grid.
pub const DEFAULT_GRID_MIN: f64 = 1e-6;
/// Upper end of the default numeric-conjugation grid.
pub const DEFAULT_GRID_MAX: f64 = 1e3;
/// Number of points of the default numeric-conjugation grid.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// The default log-spaced `λ` grid used for numeric conjugation.
pub fn default_conjugation_grid() -> Vec<f64> {
    log_spaced(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS)
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("log grid needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(Error::InsufficientGrid { needed: 2, got: count });
    }
    Ok(log_spaced(lo, hi, count))
}

/// Which supremum defines the conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duality {
    /// `sup over all λ` of `λt - φ(λ)`.
    LegendreFenchel,
    /// `sup over λ > 0` (Young's complementary function).
    Young,
}

/// The concrete form of a rate function.
#[derive(Debug, Clone, PartialEq)]
pub enum RateShape {
    /// `cλ²/2`.
    Quadratic { c: f64 },
    /// `|cλ|^β / β`.
    Power { c: f64, beta: f64 },
    /// Piecewise-linear interpolation of `(grid, values)`, `grid[0] = 0`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// A validated even convex rate function with `φ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRate {
    shape: RateShape,
}

impl ConvexRate {
    /// `φ(λ) = cλ²/2`, `c > 0`.
    pub fn quadratic(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("quadratic rate needs c > 0, got {c}")));
        }
        Ok(Self { shape: RateShape::Quadratic { c } })
    }

    /// `φ(λ) = |cλ|^β / β`, `c > 0`, `β > 1`.
    pub fn power(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("power rate needs c > 0, got {c}")));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("power rate needs beta > 1, got {beta}")));
        }
        Ok(Self { shape: RateShape::Power { c, beta } })
    }

    /// A tabulated rate. The grid must start at 0 and be strictly increasing;
    /// values must start at 0, be nondecreasing and have nonnegative discrete
    /// second differences (within [`Tolerances::convexity`]).
    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!("{} grid points but {} values", grid.len(), values.len())));
        }
        if grid.len() < 2 {
            return Err(Error::InsufficientGrid { needed: 2, got: grid.len() });
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite entry".into()));
        }
        if grid[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::InvalidGrid("tabulated rate must start at (0, 0)".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        let slopes = segment_slopes(&grid, &values);
        if slopes[0] < -Tolerances::DEFAULT.convexity {
            return Err(Error::InvalidGrid("tabulated rate must be nondecreasing".into()));
        }
        if slopes.windows(2).any(|w| w[1] < w[0] - Tolerances::DEFAULT.convexity) {
            return Err(Error::InvalidGrid("tabulated rate is not convex".into()));
        }
        Ok(Self { shape: RateShape::Tabulated { grid, values } })
    }

    pub fn shape(&self) -> &RateShape {
        &self.shape
    }

    /// `φ(λ)`; the rate is extended evenly to negative `λ`.
    pub fn value(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        match &self.shape {
            RateShape::Quadratic { c } => 0.5 * c * x * x,
            RateShape::Power { c, beta } => (c * x).powf(*beta) / beta,
            RateShape::Tabulated { grid, values } => interpolate(grid, values, x),
        }
    }

    /// `φ'(λ)` for `λ ≥ 0` (odd extension below zero). For tabulated rates this
    /// is the slope of the segment containing `λ` (right derivative at nodes).
    pub fn derivative(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        let d = match &self.shape {
            RateShape::Quadratic { c } => c * x,
            RateShape::Power { c, beta } => c.powf(*beta) * x.powf(beta - 1.0),
            RateShape::Tabulated { grid, values } => {
                let slopes = segment_slopes(grid, values);
                let k = segment_index(grid, x);
                slopes[k]
            }
        };
        if lambda < 0.0 {
            -d
        } else {
            d
        }
    }

    /// `(φ')⁻¹(t)` for `t ≥ 0`.
    ///
    /// For a tabulated rate this is the node at which `λ ↦ tλ - φ(λ)` is
    /// maximal, i.e. the point whose subdifferential contains `t`; tables with
    /// collinear consecutive segments have no unique inverse.
    pub fn derivative_inverse(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("derivative inverse needs t >= 0, got {t}")));
        }
        match &self.shape {
            RateShape::Quadratic { c } => Ok(t / c),
            RateShape::Power { c, beta } => Ok((t / c.powf(*beta)).powf(1.0 / (beta - 1.0))),
            RateShape::Tabulated { grid, values } => {
                let slopes = segment_slopes(grid, values);
                let flat = slopes
                    .windows(2)
                    .any(|w| w[1] - w[0] <= Tolerances::DEFAULT.convexity * (1.0 + w[0].abs()));
                if flat || slopes[0] <= 0.0 {
                    return Err(Error::NotStrictlyConvex);
                }
                let mut best = (0usize, f64::NEG_INFINITY);
                for (i, (g, v)) in grid.iter().zip(values).enumerate() {
                    let score = t * g - v;
                    if score > best.1 {
                        best = (i, score);
                    }
                }
                Ok(grid[best.0])
            }
        }
    }

    /// The conjugate under the requested duality.
    pub fn conjugate(&self, duality: Duality) -> Result<ConjugateRate> {
        if let RateShape::Tabulated { grid, .. } = &self.shape {
            if grid.len() < 3 {
                return Err(Error::InsufficientGrid { needed: 3, got: grid.len() });
            }
        }
        Ok(ConjugateRate { source: self.clone(), duality })
    }

    /// `λ* = (φ')⁻¹((φ*)⁻¹(c))`, the multiplier that attains the bound
    /// `(φ*)⁻¹(c)` in `(φ(λ) + c)/λ`.
    pub fn optimal_lambda(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(Error::InvalidParameter(format!("optimal lambda needs c >= 0, got {c}")));
        }
        let t = self.conjugate(Duality::LegendreFenchel)?.generalized_inverse(c).value;
        self.derivative_inverse(t)
    }

    /// `min over grid λ > 0` of `(φ(λ) + c)/λ`.
    pub fn lambda_sweep_bound(&self, c: f64, grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::InsufficientGrid { needed: 1, got: 0 });
        }
        if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid("sweep grid must be positive".into()));
        }
        Ok(grid
            .iter()
            .map(|&l| (self.value(l) + c) / l)
            .fold(f64::INFINITY, f64::min))
    }

    /// `φₙ = φ/n`, with both routes to `(φₙ*)⁻¹` exposed.
    pub fn scale_by_n(&self, n: u32) -> Result<ScaledRate> {
        if n == 0 {
            return Err(Error::InvalidParameter("scale factor n must be at least 1".into()));
        }
        let nf = n as f64;
        let shape = match &self.shape {
            RateShape::Quadratic { c } => RateShape::Quadratic { c: c / nf },
            RateShape::Power { c, beta } => RateShape::Power { c: c * nf.powf(-1.0 / beta), beta: *beta },
            RateShape::Tabulated { grid, values } => RateShape::Tabulated {
                grid: grid.clone(),
                values: values.iter().map(|v| v / nf).collect(),
            },
        };
        Ok(ScaledRate { base: self.clone(), n, scaled: ConvexRate { shape } })
    }

    /// Numeric conjugate `sup_λ λt - φ(λ)` over `grid`, refined by golden
    /// section inside the bracketing cells of the best grid point.
    pub fn numeric_conjugate(&self, t: f64, grid: &[f64]) -> f64 {
        numeric_conjugate_of(|l| self.value(l), t, grid)
    }
}

/// Grid conjugate of an arbitrary convex `f`, see [`ConvexRate::numeric_conjugate`].
pub fn numeric_conjugate_of<F: Fn(f64) -> f64>(f: F, t: f64, grid: &[f64]) -> f64 {
    // -f(0) is the λ = 0 candidate, and for continuous f also the λ → 0⁺
    // limit of the Young supremum, so the two dualities agree here.
    let mut best = -f(0.0);
    if grid.is_empty() {
        return best;
    }
    let mut k = 0;
    let mut grid_best = f64::NEG_INFINITY;
    for (i, &l) in grid.iter().enumerate() {
        let s = t * l - f(l);
        if s > grid_best {
            grid_best = s;
            k = i;
        }
    }
    let lo = if k == 0 { grid[0] } else { grid[k - 1] };
    let hi = if k + 1 == grid.len() { grid[k] } else { grid[k + 1] };
    let (_, refined) = golden_max(|l| t * l - f(l), lo, hi, 200);
    best = best.max(grid_best).max(refined);
    best
}

/// Generalized inverse `inf{s ≥ 0 : g(s) ≥ t}` of a nondecreasing `g`, by bracketing and bisection.
pub fn numeric_generalized_inverse<G: Fn(f64) -> f64>(g: G, t: f64) -> Inverse {
    if g(0.0) >= t {
        return Inverse { value: 0.0, saturated: false };
    }
    let mut hi = 1.0;
    while g(hi) < t {
        hi *= 2.0;
        if hi > 1e300 {
            return Inverse { value: f64::MAX, saturated: true };
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Inverse { value: hi, saturated: false }
}

fn segment_slopes(grid: &[f64], values: &[f64]) -> Vec<f64> {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0]))
        .collect()
}

// Index of the segment [grid[k], grid[k+1]) containing x, clamped to the table.
fn segment_index(grid: &[f64], x: f64) -> usize {
    let last = grid.len() - 2;
    match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap_or(core::cmp::Ordering::Less)) {
        Ok(i) => i.min(last),
        Err(i) => i.saturating_sub(1).min(last),
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let k = segment_index(grid, x);
    let slope = (values[k + 1] - values[k]) / (grid[k + 1] - grid[k]);
    values[k] + slope * (x - grid[k])
}

/// Result of a generalized inverse: `saturated` marks an empty set, in which
/// case `value` is the largest representable bound rather than `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse {
    pub value: f64,
    pub saturated: bool,
}

/// `φ*` for a [`ConvexRate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateRate {
    source: ConvexRate,
    duality: Duality,
}

impl ConjugateRate {
    pub fn source(&self) -> &ConvexRate {
        &self.source
    }

    pub fn duality(&self) -> Duality {
        self.duality
    }

    /// `φ*(t)`, closed form for quadratic and power rates, exact supremum
    /// over the table's nodes for tabulated ones. Even in `t`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.source.shape {
            RateShape::Quadratic { c } => t * t / (2.0 * c),
            RateShape::Power { c, beta } => {
                let alpha = beta / (beta - 1.0);
                (t / c).powf(alpha) / alpha
            }
            // The node λ = 0 doubles as the λ → 0⁺ limit of the Young
            // supremum, so both dualities share this table.
            RateShape::Tabulated { grid, values } => grid
                .iter()
                .zip(values)
                .map(|(g, v)| t * g - v)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `(φ*)⁻¹(t) = inf{s ≥ 0 : φ*(s) ≥ t}`.
    pub fn generalized_inverse(&self, t: f64) -> Inverse {
        if t.is_nan() || t == f64::INFINITY {
            return Inverse { value: f64::MAX, saturated: true };
        }
        if t <= self.value(0.0) {
            return Inverse { value: 0.0, saturated: false };
        }
        let value = match &self.source.shape {
            RateShape::Quadratic { c } => (2.0 * c * t).sqrt(),
            RateShape::Power { c, beta } => {
                let alpha = beta / (beta - 1.0);
                (alpha * c.powf(alpha) * t).powf(1.0 / alpha)
            }
            // φ* is the upper envelope of the lines s·λᵢ - vᵢ, so the first
            // s at which it reaches t is where the earliest line does.
            RateShape::Tabulated { grid, values } => grid
                .iter()
                .zip(values)
                .filter(|(g, _)| **g > 0.0)
                .map(|(g, v)| (t + v) / g)
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
        };
        Inverse { value, saturated: false }
    }
}

/// `φₙ = φ/n` together with the base rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRate {
    base: ConvexRate,
    n: u32,
    scaled: ConvexRate,
}

impl ScaledRate {
    pub fn base(&self) -> &ConvexRate {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `φₙ` itself, with re-parametrized closed form where one exists.
    pub fn scaled(&self) -> &ConvexRate {
        &self.scaled
    }

    /// `(φₙ*)⁻¹(t)` computed from the rescaled rate.
    pub fn inverse_conjugate(&self, t: f64) -> Inverse {
        self.scaled
            .conjugate(Duality::LegendreFenchel)
            .map(|c| c.generalized_inverse(t))
            .unwrap_or(Inverse { value: f64::NAN, saturated: true })
    }

    /// `(1/n)·(φ*)⁻¹(n·t)` computed from the base rate.
    pub fn inverse_conjugate_via_base(&self, t: f64) -> Inverse {
        let nf = self.n as f64;
        let inv = self
            .base
            .conjugate(Duality::LegendreFenchel)
            .map(|c| c.generalized_inverse(nf * t))
            .unwrap_or(Inverse { value: f64::NAN, saturated: true });
        Inverse { value: inv.value / nf, saturated: inv.saturated }
    }
}
