//! Numerical toolkit for information-theoretic inequalities on finite spaces.
//!
//! The crate computes φ-divergences, discrete Wasserstein distances and
//! Legendre–Fenchel / Young conjugates of one-dimensional rate functions, and
//! uses them to evaluate generalization-error bounds and
//! transportation-cost inequalities in both directions:
//!
//! * [`spaces`]: finite metric spaces, measures, functions and their statistics.
//! * [`convex`]: rate functions `φ`, their conjugates and generalized inverses.
//! * [`divergences`]: `D_φ(ν‖μ)` and the dual functionals `ψ_μ(f)`.
//! * [`transport`]: `W_p` via the Kantorovich program and the W₁ dual.
//! * [`tci`]: forward bounds, converse checks and constant estimation.
//! * [`learning`]: exact Gibbs-posterior experiments and the bounds they satisfy.
//!
//! Everything here is `no_std` (with `alloc`); file formats and the command
//! line live in the companion `divbound` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod convex;
pub mod divergences;
mod error;
pub mod learning;
pub mod lp;
pub(crate) mod numeric;
pub mod rng;
pub mod spaces;
pub mod tci;
pub mod transport;

pub use config::Tolerances;
pub use convex::{ConjugateRate, ConvexRate, Duality, Inverse, RateShape, ScaledRate};
pub use divergences::{DivergenceKind, DivergenceValue};
pub use error::{Error, Result};
pub use learning::{BoundReport, BoundSelection, GibbsAlgorithm, JointLaw, LearningProblem};
pub use rng::SeededRng;
pub use spaces::{DiscreteMeasure, FiniteMetricSpace, RealFunction};
pub use tci::{MomentConstant, SubGaussianFit, TciReport, Witness};
pub use transport::{CouplingPlan, TransportResult};
