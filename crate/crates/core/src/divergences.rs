//! φ-divergences `D_φ(ν‖μ) = μ(φ(dν/dμ))` and their dual functionals.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::numeric::{compensated_sum, weighted_log_sum_exp};
use crate::spaces::{expectation, same_len};
use crate::{DiscreteMeasure, Error, RealFunction, Result};

/// The divergences used by the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    /// `x log x`: the Kullback–Leibler divergence, in nats.
    Kl,
    /// `|x - 1|`: twice the total-variation distance.
    Tv,
    /// `(x - 1)²`: Pearson's χ².
    ChiSquare,
    /// `x²/2`: equals `(χ² + 1)/2`.
    ChiSquareForm,
    /// `x^α/α`: the Hellinger integral `H_α`.
    Hellinger { alpha: f64 },
}

impl DivergenceKind {
    pub fn hellinger(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && alpha != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hellinger order must lie in (0,1) or (1,∞), got {alpha}"
            )));
        }
        Ok(DivergenceKind::Hellinger { alpha })
    }

    /// The generator `φ(x)` for `x ≥ 0`.
    pub fn generator(&self, x: f64) -> f64 {
        match *self {
            DivergenceKind::Kl => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            DivergenceKind::Tv => (x - 1.0).abs(),
            DivergenceKind::ChiSquare => (x - 1.0) * (x - 1.0),
            DivergenceKind::ChiSquareForm => 0.5 * x * x,
            DivergenceKind::Hellinger { alpha } => x.abs().powf(alpha) / alpha,
        }
    }

    /// `lim φ(x)/x` as `x → ∞`: the cost per unit of ν-mass placed where μ
    /// vanishes.
    fn recession_slope(&self) -> f64 {
        match *self {
            DivergenceKind::Tv => 1.0,
            DivergenceKind::Hellinger { alpha } if alpha < 1.0 => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Conjugate exponent `β = α/(α-1)` of a Hellinger order, `2` for the χ² form.
    pub fn dual_exponent(&self) -> Option<f64> {
        match *self {
            DivergenceKind::ChiSquareForm => Some(2.0),
            DivergenceKind::Hellinger { alpha } if alpha > 1.0 => Some(alpha / (alpha - 1.0)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            DivergenceKind::Kl => "kl".into(),
            DivergenceKind::Tv => "tv".into(),
            DivergenceKind::ChiSquare => "chi2".into(),
            DivergenceKind::ChiSquareForm => "chi2form".into(),
            DivergenceKind::Hellinger { alpha } => format!("hellinger:{alpha}"),
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(DivergenceKind::Kl),
            "tv" => Ok(DivergenceKind::Tv),
            "chi2" => Ok(DivergenceKind::ChiSquare),
            "chi2form" => Ok(DivergenceKind::ChiSquareForm),
            other => match other.strip_prefix("hellinger:") {
                Some(a) => {
                    let alpha: f64 = a
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad Hellinger order `{a}`")))?;
                    DivergenceKind::hellinger(alpha)
                }
                None => Err(Error::InvalidParameter(format!("unknown divergence `{other}`"))),
            },
        }
    }
}

/// A divergence value, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: f64,
    pub kind: DivergenceKind,
    /// Whether ν ≪ μ.
    pub absolutely_continuous: bool,
}

impl DivergenceValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `D_φ(ν‖μ) = Σ_{μᵢ>0} μᵢ φ(νᵢ/μᵢ)`, plus the recession term for mass of ν
/// outside the support of μ (`+∞` for superlinear generators).
pub fn divergence(kind: DivergenceKind, nu: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<DivergenceValue> {
    divergence_with(kind, nu, mu, |it| it.sum())
}

/// Same as [`divergence`] with compensated summation.
pub(crate) fn divergence_precise(
    kind: DivergenceKind,
    nu: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<DivergenceValue> {
    divergence_with(kind, nu, mu, |it| compensated_sum(it))
}

fn divergence_with<S>(kind: DivergenceKind, nu: &DiscreteMeasure, mu: &DiscreteMeasure, sum: S) -> Result<DivergenceValue>
where
    S: Fn(&mut dyn Iterator<Item = f64>) -> f64,
{
    same_len(mu.len(), nu.len())?;
    mu.require_probability()?;
    let absolutely_continuous = nu.absolutely_continuous_wrt(mu);
    let outside: f64 = nu
        .weights()
        .iter()
        .zip(mu.weights())
        .filter(|(_, &m)| m == 0.0)
        .map(|(&n, _)| n)
        .sum();
    let recession = if outside > 0.0 {
        let slope = kind.recession_slope();
        if slope.is_infinite() {
            return Ok(DivergenceValue { value: f64::INFINITY, kind, absolutely_continuous });
        }
        slope * outside
    } else {
        0.0
    };
    let mut terms = nu
        .weights()
        .iter()
        .zip(mu.weights())
        .filter(|(_, &m)| m > 0.0)
        .map(|(&n, &m)| match kind {
            // ν log(ν/μ) avoids the overflow of (ν/μ) log(ν/μ) for tiny μ
            DivergenceKind::Kl if n > 0.0 => n * (n / m).ln(),
            _ => m * kind.generator(n / m),
        });
    let value = sum(&mut terms) + recession;
    Ok(DivergenceValue { value, kind, absolutely_continuous })
}

/// `TV(ν, μ) = ½ Σ |νᵢ - μᵢ| = sup_A |ν(A) - μ(A)|`.
pub fn total_variation(nu: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<f64> {
    same_len(mu.len(), nu.len())?;
    nu.require_probability()?;
    mu.require_probability()?;
    Ok(0.5 * nu.weights().iter().zip(mu.weights()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Pearson's `χ²(ν‖μ) = Σ (νᵢ - μᵢ)²/μᵢ`; [`Error::Infinite`] if not ν ≪ μ.
pub fn chi_square(nu: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<f64> {
    same_len(mu.len(), nu.len())?;
    mu.require_probability()?;
    let mut acc = 0.0;
    for (&n, &m) in nu.weights().iter().zip(mu.weights()) {
        if m > 0.0 {
            acc += (n - m) * (n - m) / m;
        } else if n > 0.0 {
            return Err(Error::Infinite);
        }
    }
    Ok(acc)
}

/// The dual functional `ψ_μ(f)` of `D_φ(·‖μ)`:
/// `log μ(e^f)` for KL (Donsker–Varadhan), `½μ(f²)` for the χ² form and
/// `μ(|f|^β)/β` for `H_α` with `β = α/(α-1)`.
pub fn dual_psi(kind: DivergenceKind, mu: &DiscreteMeasure, f: &RealFunction) -> Result<f64> {
    same_len(mu.len(), f.len())?;
    match kind {
        DivergenceKind::Kl => Ok(weighted_log_sum_exp(mu.weights(), f.values())),
        DivergenceKind::ChiSquareForm => Ok(0.5 * mu.weights().iter().zip(f.values()).map(|(w, v)| w * v * v).sum::<f64>()),
        DivergenceKind::Hellinger { alpha } if alpha > 1.0 => {
            let beta = alpha / (alpha - 1.0);
            Ok(mu
                .weights()
                .iter()
                .zip(f.values())
                .map(|(w, v)| w * v.abs().powf(beta))
                .sum::<f64>()
                / beta)
        }
        other => Err(Error::UnsupportedDual(other.name())),
    }
}

/// `D_φ(ν‖μ) - [ν(f) - ψ_μ(f)]`, nonnegative by the Fenchel–Young inequality.
pub fn fenchel_gap(kind: DivergenceKind, mu: &DiscreteMeasure, nu: &DiscreteMeasure, f: &RealFunction) -> Result<f64> {
    let psi = dual_psi(kind, mu, f)?;
    let d = divergence(kind, nu, mu)?;
    Ok(d.value - (expectation(nu, f)? - psi))
}

/// Largest discrepancy between evaluating the dual on `μ × ξ` directly and
/// iterating it: `ψ_{μ×ξ}(f) = ξ(ψ_μ(f))` for φ-divergences and
/// `exp ψ_{μ×ξ}(f) = ξ(exp ψ_μ(f))` for KL.
///
/// `f_joint` is indexed `i * xi.len() + j` with `i` a point of μ's space.
pub fn product_dual_identity_check(
    kind: DivergenceKind,
    mu: &DiscreteMeasure,
    xi: &DiscreteMeasure,
    f_joint: &RealFunction,
) -> Result<f64> {
    let (m, k) = (mu.len(), xi.len());
    same_len(m * k, f_joint.len())?;
    let direct = dual_psi(kind, &mu.product(xi), f_joint)?;
    let inner: alloc::vec::Vec<f64> = (0..k)
        .map(|j| {
            let column = RealFunction::new((0..m).map(|i| f_joint.values()[i * k + j]).collect())?;
            dual_psi(kind, mu, &column)
        })
        .collect::<Result<_>>()?;
    let iterated = match kind {
        DivergenceKind::Kl => weighted_log_sum_exp(xi.weights(), &inner),
        _ => xi.weights().iter().zip(&inner).map(|(w, v)| w * v).sum(),
    };
    Ok((direct - iterated).abs())
}
