use super::{check_alpha, TestError, TestMethod, TestResult};
use crate::special::chi_square_sf;

/// Smallest expected count a bin may keep after merging.
pub const MIN_EXPECTED: f64 = 5.0;
const MIN_CHI2_SAMPLES: usize = 30;

/// Merge adjacent bins left to right until every expected count is at least
/// [`MIN_EXPECTED`]; a short remainder on the right joins its left neighbour.
pub fn merge_bins(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= MIN_EXPECTED {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += o;
                *le += e;
            }
            _ => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    (obs, exp)
}

/// Pearson statistic on pre-binned counts after merging small bins.
pub fn chi2_gof_binned(
    observed: &[f64],
    expected: &[f64],
    n_fitted: usize,
    alpha: f64,
) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    let (obs, exp) = merge_bins(observed, expected);
    if obs.len() < 2 {
        return Err(TestError::FewerThanTwoBins);
    }
    if obs.len() < n_fitted + 2 {
        return Err(TestError::NoDegreesOfFreedom {
            bins: obs.len(),
            fitted: n_fitted,
        });
    }
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (obs.len() - 1 - n_fitted) as f64;
    Ok(TestResult::new(TestMethod::ChiSquare, stat, chi_square_sf(stat, dof), alpha, dof))
}

/// Chi-square goodness of fit for count data.
///
/// One bin per integer over the observed range, with the mass below the
/// minimum folded into the first bin and the mass above the maximum into the
/// last, then merged by [`merge_bins`]. `n_fitted` parameters estimated from
/// the data are deducted from the degrees of freedom.
pub fn chi2_gof<F: Fn(u64) -> f64>(
    samples: &[u64],
    pmf: F,
    n_fitted: usize,
    alpha: f64,
) -> Result<TestResult, TestError> {
    if samples.is_empty() {
        return Err(TestError::EmptySamples);
    }
    if samples.len() < MIN_CHI2_SAMPLES {
        return Err(TestError::TooFewSamples {
            got: samples.len(),
            need: MIN_CHI2_SAMPLES,
        });
    }
    let lo = *samples.iter().min().unwrap();
    let hi = *samples.iter().max().unwrap();
    let n = samples.len() as f64;
    let width = (hi - lo + 1) as usize;
    let mut observed = vec![0.0; width];
    for &x in samples {
        observed[(x - lo) as usize] += 1.0;
    }
    let below: f64 = (0..lo).map(&pmf).sum();
    let mut probs: Vec<f64> = (lo..=hi).map(&pmf).collect();
    let inside: f64 = probs.iter().sum();
    let above = (1.0 - below - inside).max(0.0);
    probs[0] += below;
    probs[width - 1] += above;
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    chi2_gof_binned(&observed, &expected, n_fitted, alpha)
}

/// Chi-square goodness of fit for continuous data: `bins` equal-width bins
/// over the sample range, tails folded into the edge bins, then merged.
pub fn chi2_gof_continuous<F: Fn(f64) -> f64>(
    samples: &[f64],
    cdf: F,
    bins: usize,
    n_fitted: usize,
    alpha: f64,
) -> Result<TestResult, TestError> {
    if samples.is_empty() {
        return Err(TestError::EmptySamples);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(TestError::NonFinite);
    }
    let bins = bins.max(2);
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(TestError::FewerThanTwoBins);
    }
    let width = (hi - lo) / bins as f64;
    let edge = |i: usize| if i == bins { hi } else { lo + i as f64 * width };
    let mut observed = vec![0.0; bins];
    for &x in samples {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        observed[i] += 1.0;
    }
    let n = samples.len() as f64;
    let expected: Vec<f64> = (0..bins)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { cdf(edge(i)) };
            let right = if i + 1 == bins { 1.0 } else { cdf(edge(i + 1)) };
            (right - left).max(0.0) * n
        })
        .collect();
    chi2_gof_binned(&observed, &expected, n_fitted, alpha)
}
