//! Forward bounds `ν(f) - μ(f) ≤ (φ*)⁻¹(D(ν‖μ))`, converse checks
//! `ψ_μ(λf) ≤ φ(λ)`, constant estimation and randomized violation search.
//!
//! Every sweep comes in two forms: a convenience wrapper drawing its master
//! seed from a [`SeededRng`], and a `*_trials` function evaluating an explicit
//! range of trial indices. Trial `i` always uses `SeededRng::for_trial(master, i)`,
//! so disjoint ranges can run anywhere and [`TciReport::merge`] reassembles
//! the same report.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::RngCore;

use crate::convex::{Duality, RateShape};
use crate::divergences::{divergence, divergence_precise, dual_psi};
use crate::numeric::{compensated_sum, golden_max, log_spaced};
use crate::spaces::{cgf, expectation, lipschitz_projection, random_weights, same_len};
use crate::transport::{lipschitz_argmax, w1_dual, wasserstein};
use crate::{
    ConvexRate, DiscreteMeasure, DivergenceKind, Error, FiniteMetricSpace, RealFunction, Result, SeededRng, Tolerances,
};

pub const LAMBDA_MIN: f64 = 1e-4;
pub const LAMBDA_MAX: f64 = 1e2;
pub const LAMBDA_POINTS: usize = 512;
/// Witnesses kept per report; the counts are always complete.
pub const MAX_WITNESSES: usize = 16;
/// Largest space accepted by [`moment_constant`].
pub const MOMENT_MAX_POINTS: usize = 16;
/// Spaces up to this size get an exact vertex enumeration.
pub const EXHAUSTIVE_MAX_POINTS: usize = 7;

const FORWARD_PROBES: usize = 48;
const ASCENT_STEPS: usize = 256;

/// `LAMBDA_POINTS` log-spaced multipliers in `[LAMBDA_MIN, LAMBDA_MAX]`.
pub fn positive_lambda_grid() -> Vec<f64> {
    log_spaced(LAMBDA_MIN, LAMBDA_MAX, LAMBDA_POINTS)
}

/// [`positive_lambda_grid`] together with its mirror image on `λ < 0`.
pub fn symmetric_lambda_grid() -> Vec<f64> {
    let pos = positive_lambda_grid();
    pos.iter().rev().map(|l| -l).chain(pos.iter().copied()).collect()
}

/// Grid-certified sub-Gaussian constant `σ̂² = max 2·cgf(λ)/λ²`, refined by
/// golden section in the cells next to the best grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SubGaussianFit {
    pub sigma_sq: f64,
    pub lambda_grid: Vec<f64>,
    pub max_ratio_at: f64,
}

pub fn subgaussian_fit(mu: &DiscreteMeasure, f: &RealFunction, lambda_grid: &[f64]) -> Result<SubGaussianFit> {
    same_len(mu.len(), f.len())?;
    let nonzero: Vec<f64> = lambda_grid.iter().copied().filter(|l| *l != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::InsufficientGrid { needed: 1, got: 0 });
    }
    if nonzero.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidGrid("multipliers must be finite".into()));
    }
    let mut sorted = nonzero;
    sorted.sort_by(f64::total_cmp);
    let ratio = |l: f64| cgf(mu, f, l).map(|c| 2.0 * c / (l * l));
    let ratios: Vec<f64> = sorted.iter().map(|&l| ratio(l)).collect::<Result<_>>()?;
    let (best, mut sigma_sq) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc });
    let mut max_ratio_at = sorted[best];
    // an interior maximum falls between grid points; refine inside the two
    // neighbouring cells on the same side of zero
    let neighbours = [best.checked_sub(1), Some(best + 1).filter(|&k| k < sorted.len())];
    for k in neighbours.into_iter().flatten() {
        let (a, b) = (sorted[k.min(best)], sorted[k.max(best)]);
        if a * b <= 0.0 {
            continue;
        }
        let (at, value) = golden_max(|l| ratio(l).unwrap_or(f64::NEG_INFINITY), a, b, 200);
        if value > sigma_sq {
            sigma_sq = value;
            max_ratio_at = at;
        }
    }
    let sigma_sq = sigma_sq.max(0.0);
    Ok(SubGaussianFit { sigma_sq, lambda_grid: lambda_grid.to_vec(), max_ratio_at })
}

/// Largest centered β-th moment found over 1-Lipschitz functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentConstant {
    /// `ĉ = μ(|f - μf|^β)^{1/β}` at the best `f`.
    pub c: f64,
    pub beta: f64,
    /// The maximizer, centered under μ.
    pub witness_f: RealFunction,
}

fn centered_moment(mu: &[f64], f: &[f64], beta: f64) -> f64 {
    let m: f64 = mu.iter().zip(f).map(|(w, v)| w * v).sum();
    mu.iter().zip(f).map(|(w, v)| w * (v - m).abs().powf(beta)).sum()
}

fn centered_moment_gradient(mu: &[f64], f: &[f64], beta: f64) -> Vec<f64> {
    let m: f64 = mu.iter().zip(f).map(|(w, v)| w * v).sum();
    let s: Vec<f64> = f
        .iter()
        .map(|v| {
            let x = v - m;
            x.abs().powf(beta - 1.0) * x.signum() * if x == 0.0 { 0.0 } else { 1.0 }
        })
        .collect();
    let mean: f64 = mu.iter().zip(&s).map(|(w, v)| w * v).sum();
    mu.iter().zip(&s).map(|(w, v)| beta * w * (v - mean)).collect()
}

/// Repeatedly jumps to the polytope vertex maximizing the linearization.
/// Convexity makes each jump non-decreasing, and there are finitely many vertices.
fn ascend(space: &FiniteMetricSpace, mu: &[f64], beta: f64, start: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let mut f = start;
    let mut value = centered_moment(mu, &f, beta);
    for _ in 0..ASCENT_STEPS {
        let grad = centered_moment_gradient(mu, &f, beta);
        let (vertex, _) = lipschitz_argmax(space, &grad)?;
        let next = centered_moment(mu, &vertex, beta);
        if next <= value * (1.0 + 1e-13) {
            break;
        }
        f = vertex;
        value = next;
    }
    Ok((f, value))
}

/// Estimates `c` in `μ(|λf̄|^β) ≤ (cλ)^β` over 1-Lipschitz `f`, `f̄ = f - μf`.
///
/// The objective is convex, so its maximum sits at a vertex of the Lipschitz
/// polytope. Up to [`EXHAUSTIVE_MAX_POINTS`] points every vertex is visited
/// and `ĉ` is exact; larger spaces use [`moment_constant_ascent`].
pub fn moment_constant(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    beta: f64,
    search_budget: usize,
    rng: &mut SeededRng,
) -> Result<MomentConstant> {
    check_moment_inputs(space, mu, beta, search_budget)?;
    if space.len() <= EXHAUSTIVE_MAX_POINTS {
        let (f, value) = best_vertex(space, mu.weights(), beta);
        let witness_f = RealFunction::new(f)?.centered(mu)?;
        return Ok(MomentConstant { c: value.powf(1.0 / beta), beta, witness_f });
    }
    moment_constant_ascent(space, mu, beta, search_budget, rng)
}

fn check_moment_inputs(space: &FiniteMetricSpace, mu: &DiscreteMeasure, beta: f64, search_budget: usize) -> Result<()> {
    same_len(space.len(), mu.len())?;
    mu.require_probability()?;
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("moment order must exceed 1, got {beta}")));
    }
    if search_budget == 0 {
        return Err(Error::InsufficientBudget);
    }
    if space.len() > MOMENT_MAX_POINTS {
        return Err(Error::InvalidParameter(alloc::format!(
            "moment search accepts at most {MOMENT_MAX_POINTS} points, got {}",
            space.len()
        )));
    }
    Ok(())
}

/// Visits every vertex of `{f : f(0) = 0, |f(i) - f(j)| ≤ d(i,j)}`. Each one
/// makes the edges of a spanning tree tight, so trees are enumerated through
/// their Prüfer codes and each edge is oriented both ways.
fn best_vertex(space: &FiniteMetricSpace, mu: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let n = space.len();
    if n < 2 {
        return (vec![0.0; n], 0.0);
    }
    let mut best = (vec![0.0; n], 0.0);
    let mut code = vec![0usize; n - 2];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut f = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![0usize; n];
    loop {
        let edges = prufer_edges(&code, n);
        adjacency.iter_mut().for_each(Vec::clear);
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        // breadth-first order from node 0; the edge into node v is (parent[v], v)
        order.clear();
        order.push(0);
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    order.push(w);
                }
            }
        }
        for signs in 0..(1u32 << (n - 1)) {
            f[0] = 0.0;
            for (k, &v) in order.iter().enumerate().skip(1) {
                let s = if signs >> (k - 1) & 1 == 1 { 1.0 } else { -1.0 };
                f[v] = f[parent[v]] + s * space.distance(parent[v], v);
            }
            let feasible = (0..n).all(|i| ((i + 1)..n).all(|j| (f[i] - f[j]).abs() <= space.distance(i, j) * (1.0 + 1e-12)));
            if feasible {
                let value = centered_moment(mu, &f, beta);
                if value > best.1 {
                    best = (f.clone(), value);
                }
            }
        }
        // next Prüfer code in base n
        let mut pos = 0;
        loop {
            if pos == code.len() {
                return best;
            }
            code[pos] += 1;
            if code[pos] < n {
                break;
            }
            code[pos] = 0;
            pos += 1;
        }
    }
}

fn prufer_edges(code: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &v in code {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in code {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf exists");
        edges.push((leaf, v));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Vertex ascent from the signed distance functions `±d(·, x)`, then from
/// random Lipschitz projections and random vertices, until `search_budget`
/// ascents have been made. The result is a lower bound on the true constant.
pub fn moment_constant_ascent(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    beta: f64,
    search_budget: usize,
    rng: &mut SeededRng,
) -> Result<MomentConstant> {
    check_moment_inputs(space, mu, beta, search_budget)?;
    let n = space.len();
    if n < 2 {
        return Ok(MomentConstant { c: 0.0, beta, witness_f: RealFunction::constant(n, 0.0) });
    }
    let w = mu.weights();
    let mut best = (vec![0.0; n], 0.0);
    let diam = space.diameter();
    for attempt in 0..search_budget {
        let start: Vec<f64> = if attempt < 2 * n {
            let (x, sign) = (attempt / 2, if attempt % 2 == 0 { 1.0 } else { -1.0 });
            (0..n).map(|i| sign * space.distance(i, x)).collect()
        } else if attempt % 2 == 0 {
            let raw = RealFunction::new((0..n).map(|_| rng.uniform_in(-diam, diam)).collect())?;
            lipschitz_projection(space, &raw)?.into_values()
        } else {
            // the vertex selected by a random zero-sum linear functional
            let mut dir: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let mean = dir.iter().sum::<f64>() / n as f64;
            dir.iter_mut().for_each(|v| *v -= mean);
            lipschitz_argmax(space, &dir)?.0
        };
        let (f, value) = ascend(space, w, beta, start)?;
        if value > best.1 {
            best = (f, value);
        }
    }
    let witness_f = RealFunction::new(best.0)?.centered(mu)?;
    Ok(MomentConstant { c: best.1.powf(1.0 / beta), beta, witness_f })
}

/// A flagged trial. Fields not meaningful for the check are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub trial: u64,
    pub lhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub nu: Option<Vec<f64>>,
    pub f: Option<Vec<f64>>,
    pub lambda: Option<f64>,
}

/// Outcome of a randomized sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TciReport {
    /// Trials attempted, including skipped ones.
    pub trials: u64,
    pub violations: u64,
    /// Trials whose hypothesis check failed or whose bound was not licensed.
    pub skipped: u64,
    /// Minimum of `bound - lhs` over evaluated trials, `+∞` if none.
    pub worst_slack: f64,
    pub witnesses: Vec<Witness>,
    /// Slack below `-tolerance` counts as a violation.
    pub tolerance: f64,
    /// Constant of the rate function under test, when it has one.
    pub constant: Option<f64>,
}

impl TciReport {
    pub fn empty(tolerance: f64, constant: Option<f64>) -> Self {
        TciReport {
            trials: 0,
            violations: 0,
            skipped: 0,
            worst_slack: f64::INFINITY,
            witnesses: Vec::new(),
            tolerance,
            constant,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Associative combination of reports over disjoint trial ranges.
    pub fn merge(mut self, other: TciReport) -> TciReport {
        self.trials += other.trials;
        self.violations += other.violations;
        self.skipped += other.skipped;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        self.witnesses.extend(other.witnesses);
        self.witnesses.sort_by_key(|w| w.trial);
        self.witnesses.truncate(MAX_WITNESSES);
        self.constant = self.constant.or(other.constant);
        self
    }

    fn skip(&mut self) {
        self.trials += 1;
        self.skipped += 1;
    }

    fn observe(&mut self, witness: Witness) {
        self.trials += 1;
        self.worst_slack = self.worst_slack.min(witness.slack);
        if witness.slack < -self.tolerance {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness);
            }
        }
    }
}

fn rate_constant(phi: &ConvexRate) -> Option<f64> {
    match phi.shape() {
        RateShape::Quadratic { c } | RateShape::Power { c, .. } => Some(*c),
        RateShape::Tabulated { .. } => None,
    }
}

/// `(φ*)⁻¹(D_φ(ν‖μ))`, with the conjugate taken over `λ > 0`.
///
/// Zero divergence gives 0. A positive bound is only licensed when the
/// multiplier `(φ')⁻¹` of the bound is positive.
pub fn thm1_bound(kind: DivergenceKind, phi: &ConvexRate, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    bound_from_divergence(phi, divergence(kind, nu, mu)?.value)
}

/// The same bound for an already computed divergence value.
pub fn bound_from_divergence(phi: &ConvexRate, d: f64) -> Result<f64> {
    if d.is_nan() || d == f64::INFINITY {
        return Err(Error::Infinite);
    }
    if d <= 0.0 {
        return Ok(0.0);
    }
    let inv = phi.conjugate(Duality::Young)?.generalized_inverse(d);
    if inv.saturated {
        return Err(Error::Infinite);
    }
    if inv.value == 0.0 {
        return Ok(0.0);
    }
    let lambda = phi.derivative_inverse(inv.value)?;
    if !(lambda > 0.0) {
        return Err(Error::PositivityViolation { lambda });
    }
    Ok(inv.value)
}

/// Draws `ν ≪ μ`: flat Dirichlet on the support, near-μ mixtures,
/// exponential tilts along `direction` (random when absent) and point masses.
fn sample_nu(mu: &DiscreteMeasure, direction: Option<&[f64]>, rng: &mut SeededRng) -> Result<DiscreteMeasure> {
    let support = mu.support();
    let n = mu.len();
    match rng.index(5) {
        0 | 1 => random_weights(&support, rng, 0.0),
        2 => {
            let eps = 10f64.powf(rng.uniform_in(-3.0, 0.0));
            let d = random_weights(&support, rng, 0.0)?;
            let w = mu.weights().iter().zip(d.weights()).map(|(m, x)| (1.0 - eps) * m + eps * x).collect();
            DiscreteMeasure::new(w)
        }
        3 => {
            let g: Vec<f64> = match direction {
                Some(g) => g.to_vec(),
                None => (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            };
            let scale = g.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
            let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let lambda = sign * 10f64.powf(rng.uniform_in(-2.0, 1.0)) / scale;
            let top = g.iter().zip(&support).filter(|(_, s)| **s).map(|(v, _)| lambda * v).fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = mu.weights().iter().zip(&g).map(|(m, v)| m * (lambda * v - top).exp()).collect();
            let total: f64 = raw.iter().sum();
            DiscreteMeasure::new(raw.iter().map(|v| v / total).collect())
        }
        _ => {
            let points: Vec<usize> = (0..n).filter(|&i| support[i]).collect();
            Ok(DiscreteMeasure::point_mass(n, points[rng.index(points.len())]))
        }
    }
}

/// Whether `ψ_μ(λf) ≤ φ(λ)` holds on every multiplier of `grid`.
pub fn dual_hypothesis_holds(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    f_centered: &RealFunction,
    grid: &[f64],
    tol: f64,
) -> Result<bool> {
    for &l in grid {
        let psi = dual_psi(kind, mu, &f_centered.map(|v| l * v))?;
        let rate = phi.value(l);
        if psi > rate + tol * rate.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Samples `ν ≪ μ` and counts violations of `ν(f) - μ(f) ≤ (φ*)⁻¹(D(ν‖μ))`.
///
/// If `ψ_μ(λ(f - μf)) ≤ φ(λ)` fails on the positive λ grid, every trial is
/// reported as skipped.
pub fn verify_forward(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    f: &RealFunction,
    rng: &mut SeededRng,
    trials: u64,
) -> Result<TciReport> {
    verify_forward_trials(kind, phi, mu, f, rng.next_u64(), 0..trials, &Tolerances::DEFAULT)
}

pub fn verify_forward_trials(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    f: &RealFunction,
    master: u64,
    trials: Range<u64>,
    tol: &Tolerances,
) -> Result<TciReport> {
    same_len(mu.len(), f.len())?;
    mu.require_probability()?;
    let fc = f.centered(mu)?;
    let holds = dual_hypothesis_holds(kind, phi, mu, &fc, &positive_lambda_grid(), tol.convexity).unwrap_or(false);
    let mut report = TciReport::empty(tol.violation, rate_constant(phi));
    for trial in trials {
        if !holds {
            report.skip();
            continue;
        }
        let mut rng = SeededRng::for_trial(master, trial);
        let nu = sample_nu(mu, Some(fc.values()), &mut rng)?;
        match forward_slack(kind, phi, mu, &nu, f, tol)? {
            Some((lhs, bound, slack)) => report.observe(Witness {
                trial,
                lhs,
                bound,
                slack,
                nu: Some(nu.into_weights()),
                f: Some(f.values().to_vec()),
                lambda: None,
            }),
            None => report.skip(),
        }
    }
    Ok(report)
}

/// `(lhs, bound, slack)` of one forward trial, recomputed with compensated
/// sums when the fast evaluation falls below the threshold. `None` when the
/// bound is not licensed.
fn forward_slack(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    f: &RealFunction,
    tol: &Tolerances,
) -> Result<Option<(f64, f64, f64)>> {
    let lhs = expectation(nu, f)? - expectation(mu, f)?;
    let bound = match thm1_bound(kind, phi, mu, nu) {
        Ok(b) => b,
        Err(Error::PositivityViolation { .. }) | Err(Error::Infinite) => return Ok(None),
        Err(e) => return Err(e),
    };
    let slack = bound - lhs;
    if slack >= -tol.violation {
        return Ok(Some((lhs, bound, slack)));
    }
    let lhs = compensated_sum(nu.weights().iter().zip(mu.weights()).zip(f.values()).map(|((a, b), v)| (a - b) * v));
    let bound = match bound_from_divergence(phi, divergence_precise(kind, nu, mu)?.value) {
        Ok(b) => b,
        Err(Error::PositivityViolation { .. }) | Err(Error::Infinite) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some((lhs, bound, bound - lhs)))
}

/// Converse direction: for each sampled `f`, first confirms the forward
/// inequality on probe measures (including exponential tilts along `f`), then
/// checks `ψ_μ(λf̄) ≤ φ(λ)` on the positive λ grid.
///
/// The slack of the λ check is `min (φ(λ) - ψ_μ(λf̄)) / max(1, φ(λ))`.
/// Trials whose forward probe fails are skipped.
pub fn verify_converse<S>(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    f_family_sampler: S,
    rng: &mut SeededRng,
    trials: u64,
) -> Result<TciReport>
where
    S: FnMut(u64, &mut SeededRng) -> Result<RealFunction>,
{
    verify_converse_trials(kind, phi, mu, f_family_sampler, rng.next_u64(), 0..trials, &Tolerances::DEFAULT)
}

pub fn verify_converse_trials<S>(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    mut f_family_sampler: S,
    master: u64,
    trials: Range<u64>,
    tol: &Tolerances,
) -> Result<TciReport>
where
    S: FnMut(u64, &mut SeededRng) -> Result<RealFunction>,
{
    mu.require_probability()?;
    let grid = positive_lambda_grid();
    let mut report = TciReport::empty(tol.violation, rate_constant(phi));
    for trial in trials {
        let mut rng = SeededRng::for_trial(master, trial);
        let f = f_family_sampler(trial, &mut rng)?;
        same_len(mu.len(), f.len())?;
        let fc = f.centered(mu)?;
        if !forward_probe(kind, phi, mu, &fc, &grid, &mut rng, tol)? {
            report.skip();
            continue;
        }
        let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
        for &l in &grid {
            let psi = dual_psi(kind, mu, &fc.map(|v| l * v))?;
            let rate = phi.value(l);
            let slack = (rate - psi) / rate.max(1.0);
            if slack < worst.0 {
                worst = (slack, l, psi, rate);
            }
        }
        report.observe(Witness {
            trial,
            lhs: worst.2,
            bound: worst.3,
            slack: worst.0,
            nu: None,
            f: Some(fc.into_values()),
            lambda: Some(worst.1),
        });
    }
    Ok(report)
}

fn forward_probe(
    kind: DivergenceKind,
    phi: &ConvexRate,
    mu: &DiscreteMeasure,
    fc: &RealFunction,
    grid: &[f64],
    rng: &mut SeededRng,
    tol: &Tolerances,
) -> Result<bool> {
    let support = mu.support();
    let mut probes: Vec<DiscreteMeasure> = Vec::with_capacity(FORWARD_PROBES + 16);
    for _ in 0..FORWARD_PROBES {
        probes.push(sample_nu(mu, Some(fc.values()), rng)?);
    }
    for &l in grid.iter().step_by(grid.len().div_ceil(16).max(1)) {
        let top = fc.values().iter().zip(&support).filter(|(_, s)| **s).map(|(v, _)| l * v).fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = mu.weights().iter().zip(fc.values()).map(|(m, v)| m * (l * v - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        probes.push(DiscreteMeasure::new(raw.iter().map(|v| v / total).collect())?);
    }
    for nu in &probes {
        if let Some((_, _, slack)) = forward_slack(kind, phi, mu, nu, fc, tol)? {
            if slack < -tol.violation {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Samples `ν ≪ μ` and counts violations of `W₁(μ,ν) ≤ (φ*)⁻¹(D(ν‖μ))`.
pub fn tci_check(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    phi: &ConvexRate,
    kind: DivergenceKind,
    rng: &mut SeededRng,
    trials: u64,
) -> Result<TciReport> {
    tci_check_trials(space, mu, phi, kind, rng.next_u64(), 0..trials, &Tolerances::DEFAULT)
}

pub fn tci_check_trials(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    phi: &ConvexRate,
    kind: DivergenceKind,
    master: u64,
    trials: Range<u64>,
    tol: &Tolerances,
) -> Result<TciReport> {
    same_len(space.len(), mu.len())?;
    mu.require_probability()?;
    let mut report = TciReport::empty(tol.violation, rate_constant(phi));
    for trial in trials {
        let mut rng = SeededRng::for_trial(master, trial);
        let nu = sample_nu(mu, None, &mut rng)?;
        let lhs = wasserstein(space, 1.0, mu, &nu)?.distance;
        let first = match thm1_bound(kind, phi, mu, &nu) {
            Ok(b) => b,
            Err(Error::PositivityViolation { .. }) | Err(Error::Infinite) => {
                report.skip();
                continue;
            }
            Err(e) => return Err(e),
        };
        let (mut lhs, mut bound, mut slack) = (lhs, first, first - lhs);
        let mut potential = None;
        if slack < -tol.violation {
            // certify with the dual potential, an independent lower bound on W₁
            let dual = w1_dual(space, mu, &nu)?;
            let f = dual.dual_potential.expect("dual solver returns a potential");
            lhs = compensated_sum(nu.weights().iter().zip(mu.weights()).zip(f.values()).map(|((a, b), v)| (a - b) * v));
            bound = match bound_from_divergence(phi, divergence_precise(kind, &nu, mu)?.value) {
                Ok(b) => b,
                Err(Error::PositivityViolation { .. }) | Err(Error::Infinite) => {
                    report.skip();
                    continue;
                }
                Err(e) => return Err(e),
            };
            slack = bound - lhs;
            potential = Some(f.into_values());
        }
        report.observe(Witness { trial, lhs, bound, slack, nu: Some(nu.into_weights()), f: potential, lambda: None });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::chi_square;
    use crate::transport::hamming_space;

    fn pm1() -> (DiscreteMeasure, RealFunction) {
        (DiscreteMeasure::uniform(2), RealFunction::new(vec![-1.0, 1.0]).unwrap())
    }

    #[test]
    fn grids() {
        let g = positive_lambda_grid();
        assert_eq!(g.len(), 512);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[511], 1e2);
        let s = symmetric_lambda_grid();
        assert_eq!(s.len(), 1024);
        assert_eq!(s[0], -1e2);
        assert_eq!(s[512], 1e-4);
    }

    #[test]
    fn subgaussian_examples() {
        let (mu, f) = pm1();
        let fit = subgaussian_fit(&mu, &f, &symmetric_lambda_grid()).unwrap();
        // log cosh λ ≤ λ²/2, with the ratio approaching 1 as λ → 0
        assert!(fit.sigma_sq < 1.0 && fit.sigma_sq > 1.0 - 1e-8);
        assert!(fit.max_ratio_at.abs() < 2e-4);
        let biased = DiscreteMeasure::probability(vec![0.1, 0.3, 0.6]).unwrap();
        let unit = RealFunction::new(vec![0.0, 0.4, 1.0]).unwrap();
        assert!(subgaussian_fit(&biased, &unit, &symmetric_lambda_grid()).unwrap().sigma_sq <= 0.25 + 1e-6);
        let flat = subgaussian_fit(&biased, &RealFunction::constant(3, 2.0), &symmetric_lambda_grid()).unwrap();
        assert_eq!(flat.sigma_sq, 0.0);
        assert!(matches!(subgaussian_fit(&mu, &f, &[]), Err(Error::InsufficientGrid { .. })));
        assert!(matches!(subgaussian_fit(&mu, &f, &[0.0]), Err(Error::InsufficientGrid { .. })));
    }

    #[test]
    fn subgaussian_refinement_is_monotone() {
        let mu = DiscreteMeasure::probability(vec![0.2, 0.5, 0.3]).unwrap();
        let f = RealFunction::new(vec![0.0, 1.0, 3.0]).unwrap();
        let coarse: Vec<f64> = symmetric_lambda_grid().into_iter().step_by(4).collect();
        let a = subgaussian_fit(&mu, &f, &coarse).unwrap().sigma_sq;
        let b = subgaussian_fit(&mu, &f, &symmetric_lambda_grid()).unwrap().sigma_sq;
        assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn thm1_closed_forms() {
        let mu = DiscreteMeasure::probability(vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::probability(vec![0.2, 0.8]).unwrap();
        let d = divergence(DivergenceKind::Kl, &nu, &mu).unwrap().value;
        let b = thm1_bound(DivergenceKind::Kl, &ConvexRate::quadratic(0.3).unwrap(), &mu, &nu).unwrap();
        assert!((b - (2.0 * 0.3 * d).sqrt()).abs() < 1e-15);
        for alpha in [1.5, 2.0, 3.0] {
            let beta = alpha / (alpha - 1.0);
            let c = 0.7;
            let kind = DivergenceKind::Hellinger { alpha };
            let h = divergence(kind, &nu, &mu).unwrap().value;
            let b = thm1_bound(kind, &ConvexRate::power(c, beta).unwrap(), &mu, &nu).unwrap();
            let closed = (alpha * c.powf(alpha) * h).powf(1.0 / alpha);
            assert!((b - closed).abs() < 1e-12 * closed);
        }
        // β = 2: √(c²(χ² + 1)), within the weaker √(2c²(χ² + 1))
        let chi = chi_square(&nu, &mu).unwrap();
        let b = thm1_bound(DivergenceKind::Hellinger { alpha: 2.0 }, &ConvexRate::power(0.7, 2.0).unwrap(), &mu, &nu).unwrap();
        assert!((b - (0.49 * (chi + 1.0)).sqrt()).abs() < 1e-12);
        assert!(b <= (2.0 * 0.49 * (chi + 1.0)).sqrt());
        assert_eq!(thm1_bound(DivergenceKind::Kl, &ConvexRate::quadratic(1.0).unwrap(), &mu, &mu).unwrap(), 0.0);
        let point = DiscreteMeasure::point_mass(2, 0);
        assert_eq!(
            thm1_bound(DivergenceKind::Kl, &ConvexRate::quadratic(1.0).unwrap(), &point, &mu),
            Err(Error::Infinite)
        );
    }

    #[test]
    fn thm1_monotone_in_divergence() {
        let phi = ConvexRate::power(0.5, 3.0).unwrap();
        let mut last = 0.0;
        for k in 0..100 {
            let b = bound_from_divergence(&phi, k as f64 * 0.05).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn forward_sweep_on_corollary_instance() {
        let mu = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.15, 0.05, 0.1, 0.06, 0.04]).unwrap();
        let f = RealFunction::new(vec![0.3, -1.0, 2.0, 0.0, 1.1, -0.4, 0.9, 1.7]).unwrap();
        let sigma = subgaussian_fit(&mu, &f, &symmetric_lambda_grid()).unwrap().sigma_sq;
        let phi = ConvexRate::quadratic(sigma).unwrap();
        let r = verify_forward(DivergenceKind::Kl, &phi, &mu, &f, &mut SeededRng::new(3), 2000).unwrap();
        assert_eq!(r.trials, 2000);
        assert_eq!(r.skipped, 0);
        assert_eq!(r.violations, 0, "{:?}", r.witnesses.first());
        // halving σ² breaks the hypothesis, so nothing is evaluated
        let r = verify_forward(DivergenceKind::Kl, &ConvexRate::quadratic(sigma / 2.0).unwrap(), &mu, &f, &mut SeededRng::new(3), 10).unwrap();
        assert_eq!(r.skipped, 10);
    }

    #[test]
    fn forward_constant_function_and_chi2_shape() {
        let mu = DiscreteMeasure::probability(vec![0.3, 0.3, 0.4]).unwrap();
        let flat = RealFunction::constant(3, 5.0);
        let r = verify_forward(DivergenceKind::Kl, &ConvexRate::quadratic(1.0).unwrap(), &mu, &flat, &mut SeededRng::new(1), 200).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_slack >= 0.0);
        let f = RealFunction::new(vec![0.0, 1.0, 0.25]).unwrap();
        let var = crate::spaces::central_moment(&mu, &f, 2).unwrap();
        let r = verify_forward(DivergenceKind::ChiSquareForm, &ConvexRate::quadratic(var).unwrap(), &mu, &f, &mut SeededRng::new(2), 2000).unwrap();
        assert_eq!((r.violations, r.skipped), (0, 0));
    }

    #[test]
    fn moment_constant_examples() {
        let space = hamming_space(2).unwrap();
        let mc = moment_constant(&space, &DiscreteMeasure::uniform(2), 2.0, 8, &mut SeededRng::new(0)).unwrap();
        assert!((mc.c - 0.5).abs() < 1e-12);
        assert!((mc.witness_f.values()[0].abs() - 0.5).abs() < 1e-12);
        let point = moment_constant(&FiniteMetricSpace::line(4).unwrap(), &DiscreteMeasure::point_mass(4, 1), 2.0, 8, &mut SeededRng::new(0)).unwrap();
        assert_eq!(point.c, 0.0);
        assert_eq!(
            moment_constant(&space, &DiscreteMeasure::uniform(2), 2.0, 0, &mut SeededRng::new(0)),
            Err(Error::InsufficientBudget)
        );
        assert!(moment_constant(&space, &DiscreteMeasure::uniform(2), 1.0, 4, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn report_merge_is_order_independent() {
        let mu = DiscreteMeasure::uniform(4);
        let space = hamming_space(4).unwrap();
        let phi = ConvexRate::quadratic(0.125).unwrap();
        let whole = tci_check_trials(&space, &mu, &phi, DivergenceKind::Kl, 9, 0..40, &Tolerances::DEFAULT).unwrap();
        let a = tci_check_trials(&space, &mu, &phi, DivergenceKind::Kl, 9, 0..17, &Tolerances::DEFAULT).unwrap();
        let b = tci_check_trials(&space, &mu, &phi, DivergenceKind::Kl, 9, 17..40, &Tolerances::DEFAULT).unwrap();
        assert_eq!(b.clone().merge(a.clone()), whole);
        assert_eq!(a.merge(b), whole);
        assert!(whole.violations > 0);
    }

    #[test]
    fn pinsker_and_zero_trials() {
        let mu = DiscreteMeasure::uniform(5);
        let space = hamming_space(5).unwrap();
        let phi = ConvexRate::quadratic(0.25).unwrap();
        let r = tci_check(&space, &mu, &phi, DivergenceKind::Kl, &mut SeededRng::new(4), 300).unwrap();
        assert_eq!(r.violations, 0);
        let r = tci_check(&space, &mu, &phi, DivergenceKind::Kl, &mut SeededRng::new(4), 0).unwrap();
        assert_eq!((r.trials, r.worst_slack), (0, f64::INFINITY));
    }
}
