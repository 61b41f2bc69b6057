//! Hypothesis tests used to select and compare fits: Kolmogorov–Smirnov,
//! chi-square goodness of fit, and one- and two-sample t-tests.
//!
//! Every test returns a [`TestResult`] whose `reject_null` flag is exactly
//! `p_value < alpha`.

mod chi2;
mod ks;
mod ttest;

pub use chi2::{chi2_gof, chi2_gof_binned, chi2_gof_continuous, merge_bins, MIN_EXPECTED};
pub use ks::{
    ks_bootstrap_nb, ks_statistic, ks_statistic_discrete, ks_test, ks_test_discrete, ks_two_sample,
    ks_two_sample_statistic,
};
pub use ttest::{t_test_one_sample, t_test_two_sample, t_test_two_sample_with, TwoSampleVariance};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("no samples supplied")]
    EmptySamples,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("fewer than two bins remain after merging")]
    FewerThanTwoBins,
    #[error("{bins} bins leave no degrees of freedom after {fitted} fitted parameters")]
    NoDegreesOfFreedom { bins: usize, fitted: usize },
    #[error("significance level must lie in (0,1), got {0}")]
    InvalidAlpha(f64),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "KS2")]
    KsTwoSample,
    ChiSquare,
    TTest1,
    TTest2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    #[serde(with = "crate::float_serde::scalar")]
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject_null: bool,
    /// Degrees of freedom for chi-square and t-tests, effective sample size for KS.
    pub dof_or_n: f64,
    /// Set when the statistic hit a degenerate case (zero variance, infinite t).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestResult {
    pub(crate) fn new(method: TestMethod, statistic: f64, p_value: f64, alpha: f64, dof_or_n: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            method,
            statistic,
            p_value,
            alpha,
            reject_null: p_value < alpha,
            dof_or_n,
            note: None,
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Same test evaluated at a different significance level.
    pub fn at_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            reject_null: self.p_value < alpha,
            ..self.clone()
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), TestError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(TestError::InvalidAlpha(alpha))
    }
}
