//! Discrete optimal transport on finite metric spaces.
//!
//! The primal Kantorovich problem is solved with a transportation simplex
//! (u–v potentials, northwest-corner start). The W₁ dual over 1-Lipschitz
//! potentials is solved independently with the dense simplex in [`crate::lp`],
//! so the reported duality gap compares two separate solvers.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::lp;
use crate::spaces::{expectation, same_len};
use crate::{DiscreteMeasure, Error, FiniteMetricSpace, RealFunction, Result, Tolerances};

/// Largest space accepted by the solvers.
pub const MAX_POINTS: usize = 64;

/// A coupling `π` of two measures, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    n: usize,
    matrix: Vec<f64>,
}

impl CouplingPlan {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        self.matrix.chunks(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.mass(i, j)).sum()).collect()
    }

    /// Largest absolute deviation of the marginals from `(mu, nu)`.
    pub fn marginal_residual(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let rows = self.first_marginal();
        let cols = self.second_marginal();
        rows.iter()
            .zip(mu.weights())
            .chain(cols.iter().zip(nu.weights()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ πᵢⱼ d(i,j)^p`.
    pub fn cost(&self, space: &FiniteMetricSpace, p: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let m = self.mass(i, j);
                if m > 0.0 && i != j {
                    acc += m * space.distance(i, j).powf(p);
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub distance: f64,
    pub p: f64,
    pub plan: CouplingPlan,
    /// Maximizer of `ν(f) - μ(f)` over 1-Lipschitz `f` (W₁ only).
    pub dual_potential: Option<RealFunction>,
    /// `|primal - dual|` of the transport cost.
    pub duality_gap: f64,
}

/// The discrete metric `d(x,y) = 𝟙{x ≠ y}` on `n_points` points.
pub fn hamming_space(n_points: usize) -> Result<FiniteMetricSpace> {
    if n_points < 2 {
        return Err(Error::DegenerateSpace { needed: 2, got: n_points });
    }
    FiniteMetricSpace::from_fn(n_points, |i, j| if i == j { 0.0 } else { 1.0 })
}

fn check_inputs(space: &FiniteMetricSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    same_len(space.len(), mu.len())?;
    same_len(space.len(), nu.len())?;
    mu.require_probability()?;
    nu.require_probability()?;
    if space.len() > MAX_POINTS {
        return Err(Error::InvalidParameter(format!(
            "transport solvers accept at most {MAX_POINTS} points, got {}",
            space.len()
        )));
    }
    Ok(())
}

/// `W_p(μ,ν) = (min_π Σ πᵢⱼ d(i,j)^p)^{1/p}` with an optimal plan.
///
/// For `p = 1` the Lipschitz dual is solved as well, filling `dual_potential`;
/// otherwise the gap compares against the transportation-simplex potentials.
pub fn wasserstein(space: &FiniteMetricSpace, p: f64, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("Wasserstein order must be ≥ 1, got {p}")));
    }
    check_inputs(space, mu, nu)?;
    let primal = solve_primal(space, p, mu, nu, &Tolerances::DEFAULT)?;
    if p == 1.0 {
        let (potential, dual_value) = solve_lipschitz_dual(space, mu, nu)?;
        return Ok(TransportResult {
            distance: primal.cost.max(0.0),
            p,
            plan: primal.plan,
            dual_potential: Some(potential),
            duality_gap: (primal.cost - dual_value).abs(),
        });
    }
    Ok(TransportResult {
        distance: primal.cost.max(0.0).powf(1.0 / p),
        p,
        plan: primal.plan,
        dual_potential: None,
        duality_gap: (primal.cost - primal.potential_value).abs(),
    })
}

/// W₁ through the Kantorovich–Rubinstein dual `max ν(f) - μ(f)` over
/// 1-Lipschitz `f`. The plan comes from the primal solver.
pub fn w1_dual(space: &FiniteMetricSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    check_inputs(space, mu, nu)?;
    let (potential, dual_value) = solve_lipschitz_dual(space, mu, nu)?;
    let primal = solve_primal(space, 1.0, mu, nu, &Tolerances::DEFAULT)?;
    Ok(TransportResult {
        distance: dual_value.max(0.0),
        p: 1.0,
        plan: primal.plan,
        dual_potential: Some(potential),
        duality_gap: (primal.cost - dual_value).abs(),
    })
}

/// Maximizes `Σ wᵢ fᵢ` over 1-Lipschitz `f` with `f(0) = 0`, where `Σ wᵢ = 0`.
///
/// Substituting `fᵢ = gᵢ - d(i,0)` turns every constraint into `Ag ≤ b` with
/// `b ≥ 0` (by the triangle inequality) and `g ≥ 0`, so the origin is feasible.
pub(crate) fn lipschitz_argmax(space: &FiniteMetricSpace, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = space.len();
    if n < 2 {
        return Err(Error::DegenerateSpace { needed: 2, got: n });
    }
    let k = n - 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 1..n {
        // f_i - f_0 ≤ d(i,0)
        let mut row = vec![0.0; k];
        row[i - 1] = 1.0;
        a.extend_from_slice(&row);
        b.push(2.0 * space.distance(i, 0));
    }
    for i in 1..n {
        for j in 1..n {
            if i == j {
                continue;
            }
            let mut row = vec![0.0; k];
            row[i - 1] = 1.0;
            row[j - 1] = -1.0;
            a.extend_from_slice(&row);
            let rhs = space.distance(i, j) + space.distance(i, 0) - space.distance(j, 0);
            b.push(rhs.max(0.0));
        }
    }
    let c: Vec<f64> = w[1..].to_vec();
    let sol = lp::maximize(&c, &a, &b, Tolerances::DEFAULT.pivot)?;
    let f: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { sol.x[i - 1] - space.distance(i, 0) }).collect();
    let value = w.iter().zip(&f).map(|(a, b)| a * b).sum();
    Ok((f, value))
}

fn solve_lipschitz_dual(space: &FiniteMetricSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(RealFunction, f64)> {
    let w: Vec<f64> = nu.weights().iter().zip(mu.weights()).map(|(a, b)| a - b).collect();
    let (f, _) = lipschitz_argmax(space, &w)?;
    let f = RealFunction::new(f)?;
    let value = expectation(nu, &f)? - expectation(mu, &f)?;
    Ok((f, value))
}

struct Primal {
    plan: CouplingPlan,
    cost: f64,
    /// `Σ μᵢuᵢ + Σ νⱼvⱼ` at the final potentials.
    potential_value: f64,
}

/// Transportation simplex restricted to the supports of `mu` and `nu`.
fn solve_primal(space: &FiniteMetricSpace, p: f64, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: &Tolerances) -> Result<Primal> {
    let n = space.len();
    let rows: Vec<usize> = (0..n).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| nu.weights()[j] > 0.0).collect();
    let (m, k) = (rows.len(), cols.len());
    let supply: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu.weights()[j]).collect();
    let cost = |r: usize, c: usize| -> f64 {
        let (i, j) = (rows[r], cols[c]);
        if i == j {
            0.0
        } else {
            space.distance(i, j).powf(p)
        }
    };

    // northwest corner: m + k - 1 basic cells, possibly with zero mass
    let mut x = vec![0.0; m * k];
    let mut basic = vec![false; m * k];
    let (mut r, mut c) = (0usize, 0usize);
    let (mut left_r, mut left_c) = (supply[0], demand[0]);
    loop {
        let q = left_r.min(left_c).max(0.0);
        x[r * k + c] = q;
        basic[r * k + c] = true;
        left_r -= q;
        left_c -= q;
        if r == m - 1 && c == k - 1 {
            break;
        }
        if r == m - 1 {
            c += 1;
            left_c = demand[c];
        } else if c == k - 1 || left_r <= left_c {
            r += 1;
            left_r = supply[r];
        } else {
            c += 1;
            left_c = demand[c];
        }
    }
    // the final cell absorbs the rounding difference between the two totals
    let last = (m - 1) * k + (k - 1);
    x[last] = x[last].max(0.0);

    let scale = (0..m).flat_map(|r| (0..k).map(move |c| (r, c))).fold(1.0_f64, |acc, (r, c)| acc.max(cost(r, c)));
    let rc_tol = tol.pivot * scale;
    let limit = 200 * (m + k) * (m + k) + 1000;
    let mut degenerate = 0usize;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; k];
    let mut iterations = 0usize;
    loop {
        if iterations > limit {
            return Err(Error::Internal("transportation simplex iteration limit reached".into()));
        }
        potentials(&basic, m, k, &cost, &mut u, &mut v)?;
        let bland = degenerate >= 16;
        let mut entering: Option<(usize, f64)> = None;
        for cell in 0..m * k {
            if basic[cell] {
                continue;
            }
            let reduced = cost(cell / k, cell % k) - u[cell / k] - v[cell % k];
            if reduced < -rc_tol {
                match entering {
                    None => entering = Some((cell, reduced)),
                    Some((_, best)) if !bland && reduced < best => entering = Some((cell, reduced)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some((enter, _)) = entering else { break };
        let path = tree_path(&basic, m, k, enter / k, enter % k)?;
        // path runs from the entering column back to its row; odd positions lose mass
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &cell in path.iter().step_by(2) {
            if x[cell] < theta || (x[cell] == theta && cell < leave) {
                theta = x[cell];
                leave = cell;
            }
        }
        for (pos, &cell) in path.iter().enumerate() {
            if pos % 2 == 0 {
                x[cell] = (x[cell] - theta).max(0.0);
            } else {
                x[cell] += theta;
            }
        }
        x[enter] = theta;
        basic[enter] = true;
        basic[leave] = false;
        x[leave] = 0.0;
        degenerate = if theta <= 0.0 { degenerate + 1 } else { 0 };
        iterations += 1;
    }

    let mut matrix = vec![0.0; n * n];
    let mut total = 0.0;
    for r in 0..m {
        for c in 0..k {
            let mass = x[r * k + c];
            let mass = if mass < tol.plan_clamp { 0.0 } else { mass };
            matrix[rows[r] * n + cols[c]] = mass;
            total += mass * cost(r, c);
        }
    }
    let potential_value = supply.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
        + demand.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    Ok(Primal { plan: CouplingPlan { n, matrix }, cost: total, potential_value })
}

/// Solves `uᵣ + v_c = C(r,c)` on the basic tree with `u₀ = 0`.
fn potentials<C: Fn(usize, usize) -> f64>(basic: &[bool], m: usize, k: usize, cost: &C, u: &mut [f64], v: &mut [f64]) -> Result<()> {
    // nodes 0..m are rows, m..m+k are columns
    let mut seen = vec![false; m + k];
    let mut queue = VecDeque::new();
    seen[0] = true;
    u[0] = 0.0;
    queue.push_back(0usize);
    while let Some(node) = queue.pop_front() {
        if node < m {
            for c in 0..k {
                if basic[node * k + c] && !seen[m + c] {
                    v[c] = cost(node, c) - u[node];
                    seen[m + c] = true;
                    queue.push_back(m + c);
                }
            }
        } else {
            let c = node - m;
            for r in 0..m {
                if basic[r * k + c] && !seen[r] {
                    u[r] = cost(r, c) - v[c];
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::Internal("transportation basis is not a spanning tree".into()))
    }
}

/// Basic cells on the tree path from column `col` to row `row`, in order.
fn tree_path(basic: &[bool], m: usize, k: usize, row: usize, col: usize) -> Result<Vec<usize>> {
    let mut parent = vec![usize::MAX; m + k];
    let start = m + col;
    parent[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        let neighbours: Vec<usize> = if node < m {
            (0..k).filter(|&c| basic[node * k + c]).map(|c| m + c).collect()
        } else {
            (0..m).filter(|&r| basic[r * k + node - m]).collect()
        };
        for next in neighbours {
            if parent[next] == usize::MAX {
                parent[next] = node;
                queue.push_back(next);
            }
        }
    }
    if parent[row] == usize::MAX {
        return Err(Error::Internal("entering cell is not connected to the basis".into()));
    }
    // walk back from the row to the starting column, then reverse
    let mut cells = Vec::new();
    let mut node = row;
    while node != start {
        let prev = parent[node];
        let cell = if node < m { node * k + (prev - m) } else { prev * k + (node - m) };
        cells.push(cell);
        node = prev;
    }
    cells.reverse();
    Ok(cells)
}
