//! Numerical tolerances shared by the whole crate.

/// Every tolerance the crate uses, with its default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute slack for the triangle inequality of a metric.
    pub triangle: f64,
    /// Allowed deviation of a probability measure's total mass from 1.
    pub probability_sum: f64,
    /// Allowed marginal residual of a coupling plan.
    pub marginal: f64,
    /// Entries of a plan above `-plan_clamp` are clamped to zero.
    pub plan_clamp: f64,
    /// Maximal admissible primal/dual gap of a transport solve.
    pub duality_gap: f64,
    /// An inequality is violated when `bound - lhs` falls below `-violation`.
    pub violation: f64,
    /// Slack for discrete second differences (convexity checks).
    pub convexity: f64,
    /// Pivot tolerance of the simplex solvers.
    pub pivot: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        triangle: 1e-12,
        probability_sum: 1e-10,
        marginal: 1e-9,
        plan_clamp: 1e-12,
        duality_gap: 1e-8,
        violation: 1e-9,
        convexity: 1e-9,
        pivot: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
