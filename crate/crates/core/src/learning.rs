//! Exact enumeration of Gibbs learning problems on finite data and hypothesis
//! spaces, with the information-theoretic bounds on their generalization error.
//!
//! Datasets `s ∈ 𝒵ⁿ` are indexed in base `|𝒵|` with the first sample as the
//! least significant digit. Joint tables over `𝒵ⁿ × ℋ` are row-major in `s`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::divergences::{chi_square, divergence};
use crate::spaces::{central_moment, same_len};
use crate::tci::{subgaussian_fit, symmetric_lambda_grid};
use crate::{ConvexRate, DiscreteMeasure, DivergenceKind, Error, RealFunction, Result};

/// Largest `|𝒵|ⁿ·|ℋ|` (or `|𝒵|²ⁿ·2ⁿ·|ℋ|` for the super-sample bound) enumerated.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// A finite learning problem: losses `ℓ(h, z)`, data law `P_Z` and sample size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningProblem {
    z_labels: Vec<String>,
    h_labels: Vec<String>,
    /// Row-major `|ℋ| × |𝒵|`.
    loss: Vec<f64>,
    data_law: DiscreteMeasure,
    n: u32,
    loss_min: f64,
    loss_max: f64,
}

fn checked_size(base: usize, exp: u32, factor: u128) -> Result<u128> {
    let mut size: u128 = factor;
    for _ in 0..exp {
        size = size.saturating_mul(base as u128);
        if size > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded { size, limit: ENUMERATION_BUDGET });
        }
    }
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { size, limit: ENUMERATION_BUDGET });
    }
    Ok(size)
}

impl LearningProblem {
    pub fn new(
        z_labels: Vec<String>,
        h_labels: Vec<String>,
        loss: Vec<Vec<f64>>,
        data_law: DiscreteMeasure,
        n: u32,
    ) -> Result<Self> {
        let (nz, nh) = (z_labels.len(), h_labels.len());
        if nz == 0 || nh == 0 {
            return Err(Error::DegenerateSpace { needed: 1, got: 0 });
        }
        same_len(nh, loss.len())?;
        same_len(nz, data_law.len())?;
        data_law.require_probability()?;
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(nz * nh);
        for row in &loss {
            same_len(nz, row.len())?;
            flat.extend_from_slice(row);
        }
        if let Some(index) = flat.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        checked_size(nz, n, nh as u128)?;
        let loss_min = flat.iter().copied().fold(f64::INFINITY, f64::min);
        let loss_max = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(LearningProblem { z_labels, h_labels, loss: flat, data_law, n, loss_min, loss_max })
    }

    /// Same data and losses with a different sample size.
    pub fn with_n(&self, n: u32) -> Result<Self> {
        let loss = self.loss.chunks(self.z_count()).map(|r| r.to_vec()).collect();
        LearningProblem::new(self.z_labels.clone(), self.h_labels.clone(), loss, self.data_law.clone(), n)
    }

    pub fn z_labels(&self) -> &[String] {
        &self.z_labels
    }

    pub fn h_labels(&self) -> &[String] {
        &self.h_labels
    }

    pub fn z_count(&self) -> usize {
        self.z_labels.len()
    }

    pub fn h_count(&self) -> usize {
        self.h_labels.len()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn data_law(&self) -> &DiscreteMeasure {
        &self.data_law
    }

    pub fn loss(&self, h: usize, z: usize) -> f64 {
        self.loss[h * self.z_count() + z]
    }

    /// `ℓ(h, ·)` as a function on `𝒵`.
    pub fn loss_row(&self, h: usize) -> RealFunction {
        let nz = self.z_count();
        RealFunction::new(self.loss[h * nz..(h + 1) * nz].to_vec()).expect("losses are finite")
    }

    pub fn loss_range(&self) -> (f64, f64) {
        (self.loss_min, self.loss_max)
    }

    /// `|𝒵|ⁿ`.
    pub fn dataset_count(&self) -> usize {
        self.z_count().pow(self.n)
    }

    /// The samples of dataset `s`.
    pub fn dataset(&self, s: usize) -> Vec<usize> {
        digits(s, self.z_count(), self.n as usize)
    }

    /// `L_s(h) = (1/n) Σᵢ ℓ(h, zᵢ)`.
    pub fn empirical_risk(&self, samples: &[usize], h: usize) -> f64 {
        samples.iter().map(|&z| self.loss(h, z)).sum::<f64>() / samples.len() as f64
    }

    /// `L_P(h) = P_Z(ℓ(h, Z))`.
    pub fn population_risk(&self, h: usize) -> f64 {
        let nz = self.z_count();
        self.data_law.weights().iter().zip(&self.loss[h * nz..(h + 1) * nz]).map(|(w, l)| w * l).sum()
    }

    /// `max_h` of the grid-certified sub-Gaussian constant of `ℓ(h, Z)`.
    pub fn sigma_sq(&self) -> Result<f64> {
        let grid = symmetric_lambda_grid();
        let mut best = 0.0_f64;
        for h in 0..self.h_count() {
            best = best.max(subgaussian_fit(&self.data_law, &self.loss_row(h), &grid)?.sigma_sq);
        }
        Ok(best)
    }

    /// `max_h Var(ℓ(h, Z))`.
    pub fn max_variance(&self) -> Result<f64> {
        let mut best = 0.0_f64;
        for h in 0..self.h_count() {
            best = best.max(central_moment(&self.data_law, &self.loss_row(h), 2)?);
        }
        Ok(best)
    }

    /// Hoeffding's constant `(max_h range ℓ(h, ·))²/4`, an upper bound on [`Self::sigma_sq`].
    pub fn hoeffding_sigma_sq(&self) -> f64 {
        let nz = self.z_count();
        self.loss
            .chunks(nz)
            .map(|row| {
                let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                (hi - lo) * (hi - lo) / 4.0
            })
            .fold(0.0, f64::max)
    }
}

fn digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(index % base);
        index /= base;
    }
    out
}

/// Gibbs posterior `P(h | s) ∝ prior(h)·exp(-γ·n·L_s(h))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsAlgorithm {
    pub prior: DiscreteMeasure,
    pub gamma: f64,
}

impl GibbsAlgorithm {
    pub fn new(prior: DiscreteMeasure, gamma: f64) -> Result<Self> {
        prior.require_probability()?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("inverse temperature must be finite and ≥ 0, got {gamma}")));
        }
        Ok(GibbsAlgorithm { prior, gamma })
    }

    pub fn uniform(h_count: usize, gamma: f64) -> Result<Self> {
        GibbsAlgorithm::new(DiscreteMeasure::uniform(h_count), gamma)
    }

    /// Posterior over `ℋ` for one dataset.
    pub fn posterior(&self, problem: &LearningProblem, samples: &[usize]) -> Vec<f64> {
        let nh = problem.h_count();
        let logits: Vec<f64> = (0..nh)
            .map(|h| {
                let p = self.prior.weights()[h];
                if p > 0.0 {
                    // n·L_s(h) as a plain sum keeps exact ties tied
                    let total: f64 = samples.iter().map(|&z| problem.loss(h, z)).sum();
                    p.ln() - self.gamma * total
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|v| v / total).collect()
    }
}

/// Exact joint law of the sample `S ~ P_Z^⊗n` and the output hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    z_count: usize,
    n: u32,
    h_count: usize,
    p_s: DiscreteMeasure,
    p_h: DiscreteMeasure,
    /// `P_SH(s, h)`, index `s·|ℋ| + h`.
    p_sh: DiscreteMeasure,
}

impl JointLaw {
    /// Joint law for an arbitrary kernel, row-major `|𝒵ⁿ| × |ℋ|`.
    pub fn from_kernel(problem: &LearningProblem, kernel: &[f64]) -> Result<Self> {
        let (ns, nh) = (problem.dataset_count(), problem.h_count());
        same_len(ns * nh, kernel.len())?;
        let p_s = dataset_law(problem);
        let mut p_sh = Vec::with_capacity(ns * nh);
        for (s, row) in kernel.chunks(nh).enumerate() {
            DiscreteMeasure::probability(row.to_vec())?;
            p_sh.extend(row.iter().map(|k| p_s.weights()[s] * k));
        }
        Ok(JointLaw::assemble(problem, p_s, p_sh))
    }

    fn assemble(problem: &LearningProblem, p_s: DiscreteMeasure, p_sh: Vec<f64>) -> Self {
        let nh = problem.h_count();
        let mut p_h = vec![0.0; nh];
        for row in p_sh.chunks(nh) {
            for (acc, v) in p_h.iter_mut().zip(row) {
                *acc += v;
            }
        }
        JointLaw {
            z_count: problem.z_count(),
            n: problem.n(),
            h_count: nh,
            p_s,
            p_h: DiscreteMeasure::new(p_h).expect("nonnegative"),
            p_sh: DiscreteMeasure::new(p_sh).expect("nonnegative"),
        }
    }

    pub fn p_s(&self) -> &DiscreteMeasure {
        &self.p_s
    }

    pub fn p_h(&self) -> &DiscreteMeasure {
        &self.p_h
    }

    pub fn p_sh(&self) -> &DiscreteMeasure {
        &self.p_sh
    }

    /// `P_S ⊗ P_H` in the layout of [`Self::p_sh`].
    pub fn product(&self) -> DiscreteMeasure {
        self.p_s.product(&self.p_h)
    }

    /// `P(h | s)`.
    pub fn kernel(&self, s: usize, h: usize) -> f64 {
        let ps = self.p_s.weights()[s];
        if ps > 0.0 {
            self.p_sh.weights()[s * self.h_count + h] / ps
        } else {
            0.0
        }
    }

    /// `P_{ZᵢH}`, index `z·|ℋ| + h`.
    pub fn sample_joint(&self, i: usize) -> DiscreteMeasure {
        let mut joint = vec![0.0; self.z_count * self.h_count];
        let stride = self.z_count.pow(i as u32);
        for (s, row) in self.p_sh.weights().chunks(self.h_count).enumerate() {
            let z = (s / stride) % self.z_count;
            for (h, v) in row.iter().enumerate() {
                joint[z * self.h_count + h] += v;
            }
        }
        DiscreteMeasure::new(joint).expect("nonnegative")
    }

    /// Largest deviation of the marginals of `P_SH` from `P_S` and `P_H`.
    pub fn marginal_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (s, row) in self.p_sh.weights().chunks(self.h_count).enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - self.p_s.weights()[s]).abs());
        }
        let total: f64 = self.p_h.weights().iter().sum();
        worst.max((total - 1.0).abs())
    }
}

/// `P_Z^⊗n` on datasets.
fn dataset_law(problem: &LearningProblem) -> DiscreteMeasure {
    let pz = problem.data_law().weights();
    let weights = (0..problem.dataset_count())
        .map(|s| problem.dataset(s).iter().map(|&z| pz[z]).product::<f64>())
        .collect();
    DiscreteMeasure::new(weights).expect("nonnegative")
}

/// Exact joint law of `(S, H)` under the Gibbs posterior.
pub fn gibbs_kernel(problem: &LearningProblem, alg: &GibbsAlgorithm) -> Result<JointLaw> {
    same_len(problem.h_count(), alg.prior.len())?;
    checked_size(problem.z_count(), problem.n(), problem.h_count() as u128)?;
    let p_s = dataset_law(problem);
    let ns = problem.dataset_count();
    let mut p_sh = Vec::with_capacity(ns * problem.h_count());
    for s in 0..ns {
        let ps = p_s.weights()[s];
        p_sh.extend(alg.posterior(problem, &problem.dataset(s)).into_iter().map(|k| ps * k));
    }
    Ok(JointLaw::assemble(problem, p_s, p_sh))
}

/// `P_SH(L_S(H) - L_P(H))`.
pub fn gen_err_exact(law: &JointLaw, problem: &LearningProblem) -> f64 {
    let nh = problem.h_count();
    let lp: Vec<f64> = (0..nh).map(|h| problem.population_risk(h)).collect();
    let mut acc = 0.0;
    for (s, row) in law.p_sh().weights().chunks(nh).enumerate() {
        let samples = problem.dataset(s);
        for (h, &w) in row.iter().enumerate() {
            if w > 0.0 {
                acc += w * (problem.empirical_risk(&samples, h) - lp[h]);
            }
        }
    }
    acc
}

/// `I(S; H) = D(P_SH ‖ P_S ⊗ P_H)` in nats.
pub fn mutual_information(law: &JointLaw) -> Result<f64> {
    Ok(divergence(DivergenceKind::Kl, law.p_sh(), &law.product())?.value)
}

/// `I(Zᵢ; H)` for every sample position.
pub fn per_sample_mutual_information(law: &JointLaw) -> Result<Vec<f64>> {
    let marginal_z = sample_marginal(law);
    (0..law.n as usize)
        .map(|i| Ok(divergence(DivergenceKind::Kl, &law.sample_joint(i), &marginal_z.product(law.p_h()))?.value))
        .collect()
}

/// `χ²(P_{ZᵢH} ‖ P_Z ⊗ P_H)` for every sample position.
pub fn per_sample_chi_square(law: &JointLaw) -> Result<Vec<f64>> {
    let marginal_z = sample_marginal(law);
    (0..law.n as usize).map(|i| chi_square(&law.sample_joint(i), &marginal_z.product(law.p_h()))).collect()
}

fn sample_marginal(law: &JointLaw) -> DiscreteMeasure {
    let joint = law.sample_joint(0);
    let w = joint.weights().chunks(law.h_count).map(|r| r.iter().sum()).collect();
    DiscreteMeasure::new(w).expect("nonnegative")
}

/// Generic bound `(φₙ*)⁻¹(D_φ(P_SH ‖ P_S P_H))` with `φₙ = φ/n`, evaluated
/// as `(1/n)(φ*)⁻¹(n·D)`.
pub fn scaled_divergence_bound(kind: DivergenceKind, phi: &ConvexRate, law: &JointLaw, problem: &LearningProblem) -> Result<f64> {
    let d = divergence(kind, law.p_sh(), &law.product())?.value;
    let inv = phi.scale_by_n(problem.n())?.inverse_conjugate_via_base(d);
    if inv.saturated {
        return Err(Error::Infinite);
    }
    Ok(inv.value)
}

/// `√(2σ²·I(S;H)/n)` with `σ²` from [`LearningProblem::sigma_sq`].
pub fn mi_bound(law: &JointLaw, problem: &LearningProblem) -> Result<f64> {
    let phi = ConvexRate::quadratic(problem.sigma_sq()?.max(f64::MIN_POSITIVE))?;
    let info = mutual_information(law)?;
    Ok(phi.scale_by_n(problem.n())?.inverse_conjugate(info.max(0.0)).value)
}

/// `√(2K(χ²(P_SH ‖ P_S P_H) + 1)/n)` with `K` the largest loss variance.
pub fn chi2_bound(law: &JointLaw, problem: &LearningProblem) -> Result<f64> {
    let k = problem.max_variance()?;
    let chi = chi_square(law.p_sh(), &law.product())?;
    Ok((2.0 * k * (chi + 1.0) / problem.n() as f64).sqrt())
}

/// Per-sample bounds: `(1/n)Σᵢ √(2σ²I(Zᵢ;H))` and
/// `(1/n)Σᵢ √(2K(χ²(P_{ZᵢH} ‖ P_Z P_H) + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsmiBounds {
    pub kl: f64,
    pub chi2: f64,
}

pub fn ismi_bound(law: &JointLaw, problem: &LearningProblem) -> Result<IsmiBounds> {
    let sigma_sq = problem.sigma_sq()?;
    let k = problem.max_variance()?;
    let n = problem.n() as f64;
    let kl = per_sample_mutual_information(law)?.iter().map(|i| (2.0 * sigma_sq * i.max(0.0)).sqrt()).sum::<f64>() / n;
    let chi2 = per_sample_chi_square(law)?.iter().map(|c| (2.0 * k * (c + 1.0)).sqrt()).sum::<f64>() / n;
    Ok(IsmiBounds { kl, chi2 })
}

/// Super-sample bound and the largest constant it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmiBound {
    pub value: f64,
    /// `max c(s̃)` over super-samples.
    pub max_constant: f64,
}

/// `E_{s̃}[√(2c(s̃)·I(U; H | s̃)/n)]` over super-samples `s̃ ∈ 𝒵²ⁿ`, where
/// `U ∈ {0,1}ⁿ` picks one element of each pair and `c(s̃)` is the squared loss
/// range over `ℋ` and the points of `s̃`.
///
/// Given `s̃`, the training-minus-test gap is `(1/n)Σ εᵢΔᵢ(H)` with Rademacher
/// `εᵢ` and `|Δᵢ| ≤ range(s̃)`, which is `range(s̃)²/n`-sub-Gaussian under
/// the product of the selection and hypothesis marginals.
pub fn cmi_bound(problem: &LearningProblem, alg: &GibbsAlgorithm) -> Result<CmiBound> {
    let (nz, nh, n) = (problem.z_count(), problem.h_count(), problem.n() as usize);
    same_len(nh, alg.prior.len())?;
    let selections = 1usize << n;
    checked_size(nz, 2 * problem.n(), (selections as u128) * nh as u128)?;
    let pz = problem.data_law().weights();
    let supersamples = nz.pow(2 * problem.n());
    let uniform_u = DiscreteMeasure::uniform(selections);
    let mut total = 0.0;
    let mut max_constant = 0.0_f64;
    let mut samples = vec![0usize; n];
    for t in 0..supersamples {
        let tilde = digits(t, nz, 2 * n);
        let weight: f64 = tilde.iter().map(|&z| pz[z]).product();
        if weight == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for h in 0..nh {
            for &z in &tilde {
                lo = lo.min(problem.loss(h, z));
                hi = hi.max(problem.loss(h, z));
            }
        }
        let c = (hi - lo) * (hi - lo);
        max_constant = max_constant.max(c);
        let mut joint = Vec::with_capacity(selections * nh);
        let mut p_h = vec![0.0; nh];
        for u in 0..selections {
            for (i, slot) in samples.iter_mut().enumerate() {
                *slot = tilde[2 * i + ((u >> i) & 1)];
            }
            let row = alg.posterior(problem, &samples);
            for (acc, v) in p_h.iter_mut().zip(&row) {
                *acc += v / selections as f64;
            }
            joint.extend(row.iter().map(|v| v / selections as f64));
        }
        let joint = DiscreteMeasure::new(joint)?;
        let product = uniform_u.product(&DiscreteMeasure::new(p_h)?);
        let info = divergence(DivergenceKind::Kl, &joint, &product)?.value.max(0.0);
        total += weight * (2.0 * c * info / n as f64).sqrt();
    }
    Ok(CmiBound { value: total, max_constant })
}

/// A bound value with the outcome of its hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEntry {
    pub value: f64,
    pub hypothesis_ok: bool,
}

impl BoundEntry {
    /// Whether the bound holds for `abs_gen_err` within `tol`.
    pub fn dominates(&self, abs_gen_err: f64, tol: f64) -> bool {
        self.value >= abs_gen_err - tol
    }
}

/// Which optional bounds [`bound_report`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundSelection {
    pub mi: bool,
    pub chi2: bool,
    pub ismi: bool,
    pub cmi: bool,
}

impl BoundSelection {
    pub const ALL: BoundSelection = BoundSelection { mi: true, chi2: true, ismi: true, cmi: true };
}

impl Default for BoundSelection {
    fn default() -> Self {
        BoundSelection::ALL
    }
}

/// All bounds for one `(problem, γ, n)` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub gamma: f64,
    pub n: u32,
    /// `E[L_S - L_P]`.
    pub gen_err: f64,
    pub abs_gen_err: f64,
    pub mutual_information: f64,
    pub per_sample_information: Vec<f64>,
    pub chi_square: f64,
    /// Grid-certified `σ̂²`, Hoeffding's `range²/4` and the largest variance `K`.
    pub sigma_sq: f64,
    pub hoeffding_sigma_sq: f64,
    pub k: f64,
    /// `2σ̂²e^{2/e}`, which must dominate `K`.
    pub k_from_sigma: f64,
    pub k_check: bool,
    pub mi_bound: Option<BoundEntry>,
    pub chi2_bound: Option<BoundEntry>,
    pub ismi_bound: Option<BoundEntry>,
    pub ismi_chi2_bound: Option<BoundEntry>,
    pub cmi_bound: Option<BoundEntry>,
    pub cmi_constant: Option<f64>,
    /// The scaled-conjugate pathway with `(KL, σ̂²λ²/2)` and `(χ² form, Kλ²)`.
    pub generic_mi: f64,
    pub generic_chi2: f64,
    /// Minimizing multiplier of `(φₙ(λ) + I)/λ`.
    pub lambda_star: f64,
    /// `1/(2⁵σ̂²)`, compared against `I(S;H)` for information only.
    pub validity_margin: f64,
}

impl BoundReport {
    /// Bounds whose hypothesis check passed, by name.
    pub fn checked_bounds(&self) -> Vec<(&'static str, f64)> {
        [
            ("mi", self.mi_bound),
            ("chi2", self.chi2_bound),
            ("ismi", self.ismi_bound),
            ("ismi_chi2", self.ismi_chi2_bound),
            ("cmi", self.cmi_bound),
        ]
        .into_iter()
        .filter_map(|(name, b)| b.filter(|b| b.hypothesis_ok).map(|b| (name, b.value)))
        .collect()
    }

    /// Names of checked bounds that fall below `abs_gen_err - tol`.
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        self.checked_bounds()
            .into_iter()
            .filter(|(_, v)| *v < self.abs_gen_err - tol)
            .map(|(name, _)| name)
            .collect()
    }
}

pub fn bound_report(problem: &LearningProblem, alg: &GibbsAlgorithm, selection: BoundSelection) -> Result<BoundReport> {
    let law = gibbs_kernel(problem, alg)?;
    let gen_err = gen_err_exact(&law, problem);
    let info = mutual_information(&law)?;
    let per_sample_information = per_sample_mutual_information(&law)?;
    let chi = chi_square(law.p_sh(), &law.product())?;
    let sigma_sq = problem.sigma_sq()?;
    let hoeffding = problem.hoeffding_sigma_sq();
    let k = problem.max_variance()?;
    let k_from_sigma = 2.0 * sigma_sq * (2.0 / core::f64::consts::E).exp();
    let sigma_ok = sigma_sq <= hoeffding + 1e-12;

    let generic_mi = scaled_divergence_bound(
        DivergenceKind::Kl,
        &ConvexRate::quadratic(sigma_sq.max(f64::MIN_POSITIVE))?,
        &law,
        problem,
    )?;
    // ½P_SP_H(λ²f²) ≤ Kλ² is the hypothesis, i.e. φ(λ) = Kλ² = Quadratic(2K)
    let generic_chi2 = scaled_divergence_bound(
        DivergenceKind::ChiSquareForm,
        &ConvexRate::quadratic((2.0 * k).max(f64::MIN_POSITIVE))?,
        &law,
        problem,
    )?;

    let entry = |value: f64, hypothesis_ok: bool| Some(BoundEntry { value, hypothesis_ok });
    let mi = if selection.mi { entry(mi_bound(&law, problem)?, sigma_ok) } else { None };
    let chi2 = if selection.chi2 { entry(chi2_bound(&law, problem)?, true) } else { None };
    let (ismi, ismi_chi2) = if selection.ismi {
        let b = ismi_bound(&law, problem)?;
        (entry(b.kl, sigma_ok), entry(b.chi2, true))
    } else {
        (None, None)
    };
    let (cmi, cmi_constant) = if selection.cmi {
        match cmi_bound(problem, alg) {
            Ok(b) => (entry(b.value, true), Some(b.max_constant)),
            Err(Error::BudgetExceeded { .. }) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    let scaled = ConvexRate::quadratic(sigma_sq.max(f64::MIN_POSITIVE))?.scale_by_n(problem.n())?;
    let lambda_star = scaled.scaled().optimal_lambda(info.max(0.0))?;
    Ok(BoundReport {
        gamma: alg.gamma,
        n: problem.n(),
        gen_err,
        abs_gen_err: gen_err.abs(),
        mutual_information: info,
        per_sample_information,
        chi_square: chi,
        sigma_sq,
        hoeffding_sigma_sq: hoeffding,
        k,
        k_from_sigma,
        k_check: k <= k_from_sigma + 1e-9,
        mi_bound: mi,
        chi2_bound: chi2,
        ismi_bound: ismi,
        ismi_chi2_bound: ismi_chi2,
        cmi_bound: cmi,
        cmi_constant,
        generic_mi,
        generic_chi2,
        lambda_star,
        validity_margin: if sigma_sq > 0.0 { 1.0 / (32.0 * sigma_sq) } else { f64::INFINITY },
    })
}
