//! Dense tableau simplex for small `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so no phase one is needed. Pivoting uses the
//! largest reduced cost and falls back to Bland's rule once degenerate pivots
//! start to repeat, which rules out cycling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Optimal primal solution together with the constraint multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Optimal dual variables `y ≥ 0` with `Aᵀy ≥ c` and `bᵀy = cᵀx`.
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const DEGENERATE_STREAK: usize = 32;

/// Solves `max cᵀx` over `{x ≥ 0 : Ax ≤ b}`; `a` is row-major `b.len() × c.len()`.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64], pivot_tol: f64) -> Result<LpSolution> {
    let (m, k) = (b.len(), c.len());
    if a.len() != m * k {
        return Err(Error::SpaceMismatch { left: a.len(), right: m * k });
    }
    if let Some(i) = b.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("right-hand side {i} is negative or NaN")));
    }
    let width = k + m + 1;
    // rows 0..m are constraints, row m is the objective (stored as -c)
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        t[i * width..i * width + k].copy_from_slice(&a[i * k..(i + 1) * k]);
        t[i * width + k + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    for j in 0..k {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (k..k + m).collect();
    let scale = c.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let cost_tol = pivot_tol * scale;

    let limit = 50 * (m + k + 10) * (m + k + 10);
    let mut degenerate = 0usize;
    let mut iterations = 0usize;
    loop {
        if iterations > limit {
            return Err(Error::Internal("simplex iteration limit reached".into()));
        }
        let obj = &t[m * width..(m + 1) * width - 1];
        let bland = degenerate >= DEGENERATE_STREAK;
        let entering = if bland {
            obj.iter().position(|&r| r < -cost_tol)
        } else {
            let mut best = None;
            let mut most = -cost_tol;
            for (j, &r) in obj.iter().enumerate() {
                if r < most {
                    most = r;
                    best = Some(j);
                }
            }
            best
        };
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + col];
            if coef > pivot_tol {
                let ratio = t[i * width + width - 1] / coef;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::Internal("linear program is unbounded".into()));
        };
        degenerate = if ratio <= 0.0 { degenerate + 1 } else { 0 };
        pivot(&mut t, width, m + 1, row, col);
        basis[row] = col;
        iterations += 1;
    }

    let mut x = vec![0.0; k];
    for (i, &var) in basis.iter().enumerate() {
        if var < k {
            x[var] = t[i * width + width - 1].max(0.0);
        }
    }
    let y = (0..m).map(|i| t[m * width + k + i].max(0.0)).collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, y, objective, iterations })
}

fn pivot(t: &mut [f64], width: usize, rows: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    t[row * width + col] = 1.0;
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for r in 0..rows {
        if r == row {
            continue;
        }
        let factor = t[r * width + col];
        if factor == 0.0 {
            continue;
        }
        for (v, pv) in t[r * width..(r + 1) * width].iter_mut().zip(&pivot_row) {
            *v -= factor * pv;
        }
        t[r * width + col] = 0.0;
    }
}
