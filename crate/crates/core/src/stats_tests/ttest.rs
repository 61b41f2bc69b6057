use serde::{Deserialize, Serialize};

use super::{check_alpha, TestError, TestMethod, TestResult};
use crate::special::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoSampleVariance {
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    Pooled,
}

fn mean_var(xs: &[f64]) -> Result<(f64, f64), TestError> {
    if xs.is_empty() {
        return Err(TestError::EmptySamples);
    }
    if xs.len() < 2 {
        return Err(TestError::TooFewSamples { got: xs.len(), need: 2 });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(TestError::NonFinite);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((m, v))
}

/// Resolve a t statistic whose standard error vanished.
fn degenerate(method: TestMethod, diff: f64, alpha: f64, dof: f64) -> TestResult {
    if diff == 0.0 {
        TestResult::new(method, 0.0, 1.0, alpha, dof).with_note("zero variance, means equal")
    } else {
        TestResult::new(method, f64::INFINITY.copysign(diff), 0.0, alpha, dof)
            .with_note("zero variance, means differ")
    }
}

/// Two-sided one-sample t-test of `H0: mean = mu0`.
pub fn t_test_one_sample(xs: &[f64], mu0: f64, alpha: f64) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    let (m, v) = mean_var(xs)?;
    let n = xs.len() as f64;
    let dof = n - 1.0;
    let se = (v / n).sqrt();
    if se == 0.0 {
        return Ok(degenerate(TestMethod::TTest1, m - mu0, alpha, dof));
    }
    let t = (m - mu0) / se;
    Ok(TestResult::new(TestMethod::TTest1, t, student_t_two_sided(t, dof), alpha, dof))
}

/// Two-sided Welch t-test of equal means.
pub fn t_test_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult, TestError> {
    t_test_two_sample_with(a, b, alpha, TwoSampleVariance::Welch)
}

pub fn t_test_two_sample_with(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    variance: TwoSampleVariance,
) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    let (ma, va) = mean_var(a)?;
    let (mb, vb) = mean_var(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (se, dof) = match variance {
        TwoSampleVariance::Pooled => {
            let dof = na + nb - 2.0;
            let sp = ((na - 1.0) * va + (nb - 1.0) * vb) / dof;
            ((sp * (1.0 / na + 1.0 / nb)).sqrt(), dof)
        }
        TwoSampleVariance::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let s = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            let dof = if denom > 0.0 { s * s / denom } else { na + nb - 2.0 };
            (s.sqrt(), dof)
        }
    };
    if se == 0.0 {
        return Ok(degenerate(TestMethod::TTest2, ma - mb, alpha, dof));
    }
    let t = (ma - mb) / se;
    Ok(TestResult::new(TestMethod::TTest2, t, student_t_two_sided(t, dof), alpha, dof))
}
