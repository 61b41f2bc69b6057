//! Negative binomial and Beta distributions with maximum-likelihood fitting.
//!
//! The negative binomial uses the `(r, p)` form with pmf weight
//! `p^r (1-p)^k`, so `p` is the success probability and the mean is
//! `r (1-p) / p`. Fitted parameters carry Wald 95% intervals computed from
//! the observed Fisher information at the optimum.

mod beta;
mod negbin;

pub use beta::{beta_cdf, beta_fit_mle, beta_moments_init, beta_pdf, beta_sample, BetaDist, BetaParams};
pub use negbin::{nb_fit_mle, nb_pmf, nb_sample, NegBinParams, NegativeBinomial};

use thiserror::Error;

/// Lower edge of the box shape parameters are kept in.
pub const SHAPE_MIN: f64 = 1e-6;
/// Upper edge of the box shape parameters are kept in.
pub const SHAPE_MAX: f64 = 1e6;
/// Iteration budget for the Newton solvers.
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("sample variance {variance} does not exceed the mean {mean}")]
    UnderdispersedData { mean: f64, variance: f64 },
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("sample {index} equals {value}, on the boundary of (0, 1)")]
    BoundaryValue { index: usize, value: f64 },
    #[error("all samples are identical")]
    DegenerateSample,
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Symmetric 2x2 covariance of a fitted parameter pair.
pub type Covariance = [[f64; 2]; 2];

/// Inverse of the negated Hessian, i.e. the observed-information covariance.
/// `None` when the Hessian is not negative definite.
pub(crate) fn covariance_from_hessian(h: [[f64; 2]; 2]) -> Option<Covariance> {
    let (a, b, d) = (-h[0][0], -h[0][1], -h[1][1]);
    let det = a * d - b * b;
    if !(a > 0.0 && det > 0.0) || !det.is_finite() {
        return None;
    }
    Some([[d / det, -b / det], [-b / det, a / det]])
}

/// Wald interval `est ± z·se`, clamped into `[lo, hi]`.
pub(crate) fn wald(est: f64, var: f64, lo: f64, hi: f64) -> (f64, f64) {
    let half = crate::special::Z_975 * var.max(0.0).sqrt();
    ((est - half).max(lo), (est + half).min(hi))
}
