//! Thread pool sizing and deterministic chunking.

use std::ops::Range;

use divbound_core::{ConvexRate, DiscreteMeasure, DivergenceKind, FiniteMetricSpace, RateShape, TciReport, Tolerances};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "DIVBOUND_THREADS";

/// Trials per work unit. Results do not depend on the thread count.
pub const TRIAL_CHUNK: u64 = 64;

/// A pool capped by `DIVBOUND_THREADS` when set.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| CliError::Internal(e.to_string()))
}

fn chunks(trials: u64, chunk: u64) -> Vec<Range<u64>> {
    (0..trials.div_ceil(chunk)).map(|k| k * chunk..((k + 1) * chunk).min(trials)).collect()
}

/// `tci_check` over `0..trials`, split into [`TRIAL_CHUNK`]-sized ranges.
#[allow(clippy::too_many_arguments)]
pub fn tci_check(
    pool: &rayon::ThreadPool,
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    phi: &ConvexRate,
    kind: DivergenceKind,
    master: u64,
    trials: u64,
    tol: &Tolerances,
) -> CliResult<TciReport> {
    let parts: Vec<_> = pool.install(|| {
        chunks(trials, TRIAL_CHUNK)
            .into_par_iter()
            .map(|range| divbound_core::tci::tci_check_trials(space, mu, phi, kind, master, range, tol))
            .collect()
    });
    let constant = match phi.shape() {
        RateShape::Quadratic { c } | RateShape::Power { c, .. } => Some(*c),
        RateShape::Tabulated { .. } => None,
    };
    let mut report = TciReport::empty(tol.violation, constant);
    for part in parts {
        report = report.merge(part?);
    }
    Ok(report)
}
