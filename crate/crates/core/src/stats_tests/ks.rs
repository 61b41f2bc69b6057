use rayon::prelude::*;

use super::{check_alpha, TestError, TestMethod, TestResult};
use crate::distributions::nb_fit_mle;
use crate::rng;
use crate::special::kolmogorov_sf;

const MIN_KS_SAMPLES: usize = 5;

/// Asymptotic p-value with the Stephens small-sample correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

fn check_samples(len: usize) -> Result<(), TestError> {
    match len {
        0 => Err(TestError::EmptySamples),
        n if n < MIN_KS_SAMPLES => Err(TestError::TooFewSamples {
            got: n,
            need: MIN_KS_SAMPLES,
        }),
        _ => Ok(()),
    }
}

/// `sup |F_n(x) - F(x)|` for a continuous hypothesised CDF, checking both
/// one-sided gaps at every sample point.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, TestError> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(TestError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// One-sample KS test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    check_samples(samples.len())?;
    let d = ks_statistic(samples, cdf)?;
    let n = samples.len() as f64;
    Ok(TestResult::new(TestMethod::Ks, d, ks_p_value(d, n), alpha, n))
}

/// `sup |F_n(x) - F(x)|` over the real line for integer data, where both the
/// empirical and the hypothesised CDF are right-continuous step functions
/// with jumps at integers. The supremum is attained at an observed value or
/// at the integer just below one.
pub fn ks_statistic_discrete<F: Fn(u64) -> f64>(samples: &[u64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut below = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        if v > 0 {
            d = d.max((below as f64 / n - cdf(v - 1)).abs());
        }
        d = d.max((j as f64 / n - cdf(v)).abs());
        below = j;
        i = j;
    }
    d
}

/// One-sample KS test for count data against a discrete CDF.
///
/// The p-value comes from the asymptotic Kolmogorov law, which is
/// conservative for discrete distributions and for parameters estimated from
/// the same data. [`ks_bootstrap_nb`] gives a calibrated alternative for
/// fitted negative binomials.
pub fn ks_test_discrete<F: Fn(u64) -> f64>(samples: &[u64], cdf: F, alpha: f64) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    check_samples(samples.len())?;
    let d = ks_statistic_discrete(samples, cdf);
    let n = samples.len() as f64;
    Ok(TestResult::new(TestMethod::Ks, d, ks_p_value(d, n), alpha, n))
}

/// Two-sample KS distance; tied values are stepped over together.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS test with effective size `n m / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult, TestError> {
    check_alpha(alpha)?;
    check_samples(a.len())?;
    check_samples(b.len())?;
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(TestError::NonFinite);
    }
    let d = ks_two_sample_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n_eff = na * nb / (na + nb);
    Ok(TestResult::new(TestMethod::KsTwoSample, d, ks_p_value(d, n_eff), alpha, n_eff))
}

/// Parametric-bootstrap p-value of the discrete KS statistic for a negative
/// binomial fitted to `samples`: refit on `replicates` datasets drawn from
/// the fit and count how often their distance reaches the observed one.
/// Replicates whose refit fails are dropped.
pub fn ks_bootstrap_nb(samples: &[u64], replicates: usize, seed: u64) -> Result<f64, TestError> {
    check_samples(samples.len())?;
    let Ok(fit) = nb_fit_mle(samples) else {
        return Err(TestError::TooFewSamples {
            got: samples.len(),
            need: MIN_KS_SAMPLES,
        });
    };
    let dist = fit.distribution();
    let observed = ks_statistic_discrete(samples, |k| dist.cdf(k));
    let distances: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut g = rng::stream(seed, b as u64);
            let sim = dist.sample(samples.len(), &mut g);
            nb_fit_mle(&sim).ok().map(|f| {
                let d = f.distribution();
                ks_statistic_discrete(&sim, |k| d.cdf(k))
            })
        })
        .collect();
    let valid: Vec<f64> = distances.into_iter().flatten().collect();
    let exceed = valid.iter().filter(|&&d| d >= observed).count();
    Ok((1 + exceed) as f64 / (1 + valid.len()) as f64)
}
