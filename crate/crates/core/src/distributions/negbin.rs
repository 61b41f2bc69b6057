use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::{covariance_from_hessian, wald, Covariance, FitError, MAX_ITERATIONS, SHAPE_MAX, SHAPE_MIN};
use crate::special::{digamma, inc_beta, ln_gamma, trigamma};

const P_MIN: f64 = 1e-9;
const P_MAX: f64 = 1.0 - 1e-9;
const MIN_NB_SAMPLES: usize = 10;

/// `NB(r, p)`: failures before the `r`-th success, pmf `Γ(k+r)/(Γ(r) k!) p^r (1-p)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeBinomial {
    pub r: f64,
    pub p: f64,
}

impl NegativeBinomial {
    pub fn new(r: f64, p: f64) -> Result<Self, FitError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(FitError::InvalidParameter(format!("r must be positive, got {r}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(FitError::InvalidParameter(format!("p must lie in (0,1), got {p}")));
        }
        Ok(Self { r, p })
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        let k = k as f64;
        ln_gamma(k + self.r) - ln_gamma(self.r) - ln_gamma(k + 1.0)
            + self.r * self.p.ln()
            + k * (-self.p).ln_1p()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// `P(K ≤ k) = I_p(r, k + 1)`.
    pub fn cdf(&self, k: u64) -> f64 {
        inc_beta(self.r, k as f64 + 1.0, self.p)
    }

    pub fn mean(&self) -> f64 {
        self.r * (1.0 - self.p) / self.p
    }

    pub fn variance(&self) -> f64 {
        self.r * (1.0 - self.p) / (self.p * self.p)
    }

    /// Gradient of `ln pmf(k)` with respect to `(r, p)`.
    pub fn ln_pmf_gradient(&self, k: u64) -> [f64; 2] {
        let k = k as f64;
        [
            digamma(k + self.r) - digamma(self.r) + self.p.ln(),
            self.r / self.p - k / (1.0 - self.p),
        ]
    }

    /// Gamma–Poisson mixture sampler.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        let gamma = Gamma::new(self.r, (1.0 - self.p) / self.p).expect("valid gamma parameters");
        (0..n)
            .map(|_| {
                let lambda: f64 = gamma.sample(rng);
                if lambda <= 0.0 {
                    0
                } else {
                    Poisson::new(lambda).map_or(lambda.round() as u64, |d| d.sample(rng) as u64)
                }
            })
            .collect()
    }
}

/// Probability of `k` under `dist`. Negative `k` is rejected.
pub fn nb_pmf(dist: &NegativeBinomial, k: i64) -> Result<f64, FitError> {
    if k < 0 {
        return Err(FitError::Domain(format!("count must be nonnegative, got {k}")));
    }
    Ok(dist.pmf(k as u64))
}

/// `n` seeded draws from `dist`.
pub fn nb_sample<R: Rng + ?Sized>(dist: &NegativeBinomial, n: usize, rng: &mut R) -> Vec<u64> {
    dist.sample(n, rng)
}

/// Maximum-likelihood negative binomial fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegBinParams {
    pub r: f64,
    pub p: f64,
    #[serde(with = "crate::float_serde::pair")]
    pub ci_r: (f64, f64),
    #[serde(with = "crate::float_serde::pair")]
    pub ci_p: (f64, f64),
    /// Observed-information covariance of `(r, p)`.
    #[serde(with = "crate::float_serde::matrix")]
    pub covariance: Covariance,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub iterations: usize,
}

impl NegBinParams {
    pub fn distribution(&self) -> NegativeBinomial {
        NegativeBinomial { r: self.r, p: self.p }
    }

    pub fn mean(&self) -> f64 {
        self.distribution().mean()
    }

    pub fn variance(&self) -> f64 {
        self.distribution().variance()
    }
}

/// Counts grouped by value; the likelihood only depends on the histogram.
struct Histogram {
    values: Vec<(f64, f64)>,
    n: f64,
    sum: f64,
    ln_factorials: f64,
}

impl Histogram {
    fn new(samples: &[u64]) -> Self {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for &x in samples {
            *counts.entry(x).or_default() += 1;
        }
        let values: Vec<(f64, f64)> = counts.into_iter().map(|(x, c)| (x as f64, c as f64)).collect();
        let sum = values.iter().map(|(x, c)| x * c).sum();
        let ln_factorials = values.iter().map(|(x, c)| c * ln_gamma(x + 1.0)).sum();
        Self {
            values,
            n: samples.len() as f64,
            sum,
            ln_factorials,
        }
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn log_likelihood(&self, r: f64, p: f64) -> f64 {
        let gamma_terms: f64 = self.values.iter().map(|(x, c)| c * ln_gamma(x + r)).sum();
        gamma_terms - self.n * ln_gamma(r) - self.ln_factorials
            + self.n * r * p.ln()
            + self.sum * (-p).ln_1p()
    }

    /// Derivative of the profile log-likelihood in `r`, with `p = r / (r + mean)`.
    fn profile_score(&self, r: f64) -> f64 {
        let m = self.mean();
        let psi: f64 = self.values.iter().map(|(x, c)| c * (digamma(x + r) - digamma(r))).sum();
        psi + self.n * (r / (r + m)).ln()
    }

    fn profile_score_slope(&self, r: f64) -> f64 {
        let m = self.mean();
        let tri: f64 = self.values.iter().map(|(x, c)| c * (trigamma(x + r) - trigamma(r))).sum();
        tri + self.n * m / (r * (r + m))
    }

    fn profile_p(&self, r: f64) -> f64 {
        (r / (r + self.mean())).clamp(P_MIN, P_MAX)
    }

    fn hessian(&self, r: f64, p: f64) -> [[f64; 2]; 2] {
        let h_rr: f64 = self.values.iter().map(|(x, c)| c * (trigamma(x + r) - trigamma(r))).sum();
        let h_rp = self.n / p;
        let h_pp = -self.n * r / (p * p) - self.sum / ((1.0 - p) * (1.0 - p));
        [[h_rr, h_rp], [h_rp, h_pp]]
    }
}

/// Fit `NB(r, p)` by maximum likelihood.
///
/// For fixed `r` the likelihood is maximized by `p = r / (r + mean)`, so the
/// search runs over `r` alone: Newton on the digamma score equation, kept
/// inside a sign-change bracket by bisection. If no bracket exists inside
/// `[1e-6, 1e6]` the profile likelihood is maximized by golden-section
/// search instead.
pub fn nb_fit_mle(samples: &[u64]) -> Result<NegBinParams, FitError> {
    if samples.len() < MIN_NB_SAMPLES {
        return Err(FitError::TooFewSamples {
            got: samples.len(),
            need: MIN_NB_SAMPLES,
        });
    }
    let hist = Histogram::new(samples);
    let mean = hist.mean();
    let variance = hist
        .values
        .iter()
        .map(|(x, c)| c * (x - mean).powi(2))
        .sum::<f64>()
        / (hist.n - 1.0);
    if variance <= mean {
        return Err(FitError::UnderdispersedData { mean, variance });
    }

    let start = (mean * mean / (variance - mean)).clamp(SHAPE_MIN, SHAPE_MAX);
    let (r, iterations) = match bracket(&hist, start) {
        Some((lo, hi)) => newton_bisect(&hist, start.clamp(lo, hi), lo, hi)?,
        None => (golden_profile(&hist), 0),
    };
    let p = hist.profile_p(r);
    let covariance = covariance_from_hessian(hist.hessian(r, p))
        .unwrap_or([[f64::INFINITY, 0.0], [0.0, f64::INFINITY]]);
    Ok(NegBinParams {
        r,
        p,
        ci_r: wald(r, covariance[0][0], 0.0, f64::INFINITY),
        ci_p: wald(p, covariance[1][1], P_MIN, P_MAX),
        covariance,
        log_likelihood: hist.log_likelihood(r, p),
        n_obs: samples.len(),
        iterations,
    })
}

/// Interval `[lo, hi]` with `score(lo) > 0 > score(hi)`.
fn bracket(hist: &Histogram, start: f64) -> Option<(f64, f64)> {
    let s = hist.profile_score(start);
    if s == 0.0 {
        return Some((start, start));
    }
    let (mut lo, mut hi) = (start, start);
    if s > 0.0 {
        loop {
            lo = hi;
            hi = (hi * 2.0).min(SHAPE_MAX);
            if hist.profile_score(hi) < 0.0 {
                return Some((lo, hi));
            }
            if hi >= SHAPE_MAX {
                return None;
            }
        }
    } else {
        loop {
            hi = lo;
            lo = (lo * 0.5).max(SHAPE_MIN);
            if hist.profile_score(lo) > 0.0 {
                return Some((lo, hi));
            }
            if lo <= SHAPE_MIN {
                return None;
            }
        }
    }
}

fn newton_bisect(hist: &Histogram, start: f64, mut lo: f64, mut hi: f64) -> Result<(f64, usize), FitError> {
    if lo == hi {
        return Ok((lo, 0));
    }
    let mut r = start;
    for it in 1..=MAX_ITERATIONS {
        let s = hist.profile_score(r);
        if s == 0.0 {
            return Ok((r, it));
        }
        if s > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope = hist.profile_score_slope(r);
        let newton = r - s / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo * hi).sqrt()
        };
        if (next - r).abs() <= 1e-14 * r || (hi - lo) <= 1e-15 * hi {
            return Ok((next, it));
        }
        r = next;
    }
    Err(FitError::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

fn golden_profile(hist: &Histogram) -> f64 {
    let f = |log_r: f64| {
        let r = log_r.exp();
        -hist.log_likelihood(r, hist.profile_p(r))
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (SHAPE_MIN.ln(), SHAPE_MAX.ln());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (0.5 * (a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    #[test]
    fn geometric_special_case() {
        let d = NegativeBinomial::new(1.0, 0.5).unwrap();
        assert_relative_eq!(nb_pmf(&d, 0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(nb_pmf(&d, 3).unwrap(), 0.0625, epsilon = 1e-15);
        assert!(matches!(nb_pmf(&d, -1), Err(FitError::Domain(_))));
    }

    #[test]
    fn pmf_normalizes_and_matches_direct_log_gamma() {
        let d = NegativeBinomial::new(2.5, 0.3).unwrap();
        // direct evaluation of Γ(k+r)/(Γ(r) k!) p^r (1-p)^k via statrs log-gamma
        let lg = statrs::function::gamma::ln_gamma;
        let direct = |k: f64| (lg(k + 2.5) - lg(2.5) - lg(k + 1.0) + 2.5 * 0.3f64.ln() + k * 0.7f64.ln()).exp();
        assert_relative_eq!(d.pmf(7), direct(7.0), max_relative = 1e-12);
        let total: f64 = (0..=10_000u64).map(|k| d.pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_relative_eq!(d.cdf(7), (0..=7).map(|k| d.pmf(k)).sum::<f64>(), max_relative = 1e-12);
    }

    #[test]
    fn log_space_stays_finite_far_in_the_tail() {
        for &r in &[0.5, 10.0, 1000.0] {
            let d = NegativeBinomial::new(r, 0.2).unwrap();
            for &k in &[0u64, 1000, 100_000, 1_000_000] {
                let lp = d.ln_pmf(k);
                assert!(lp.is_finite(), "r={r} k={k}");
            }
        }
        // the pmf itself never overflows or turns into NaN
        let d = NegativeBinomial::new(1000.0, 0.2).unwrap();
        assert!((0..=1_000_000u64).step_by(1000).all(|k| d.pmf(k).is_finite()));
    }

    #[test]
    fn fit_recovers_parameters() {
        let mut g = rng::seeded(2024);
        let data = NegativeBinomial::new(5.0, 0.2).unwrap().sample(10_000, &mut g);
        let fit = nb_fit_mle(&data).unwrap();
        assert!((4.7..=5.3).contains(&fit.r), "r = {}", fit.r);
        assert!((0.19..=0.21).contains(&fit.p), "p = {}", fit.p);
        assert!(fit.ci_r.0 < fit.r && fit.r < fit.ci_r.1);
        assert!(fit.ci_p.0 > 0.0 && fit.ci_p.1 < 1.0);
    }

    #[test]
    fn constant_zeros_are_underdispersed() {
        assert!(matches!(
            nb_fit_mle(&[0; 20]),
            Err(FitError::UnderdispersedData { .. })
        ));
        assert!(matches!(
            nb_fit_mle(&[1, 2, 3]),
            Err(FitError::TooFewSamples { got: 3, need: 10 })
        ));
    }

    #[test]
    fn score_vanishes_at_optimum() {
        let mut g = rng::seeded(8);
        let data = NegativeBinomial::new(2.0, 0.1).unwrap().sample(500, &mut g);
        let fit = nb_fit_mle(&data).unwrap();
        let hist = Histogram::new(&data);
        let (hr, hp) = (1e-5 * fit.r, 1e-5 * fit.p);
        let dr = (hist.log_likelihood(fit.r + hr, fit.p) - hist.log_likelihood(fit.r - hr, fit.p)) / (2.0 * hr);
        let dp = (hist.log_likelihood(fit.r, fit.p + hp) - hist.log_likelihood(fit.r, fit.p - hp)) / (2.0 * hp);
        assert!(dr.abs() < 1e-6 && dp.abs() < 1e-6, "dr={dr} dp={dp}");
    }

    #[test]
    fn barely_overdispersed_data_falls_back_to_the_box_edge() {
        // variance a hair above the mean: the optimum sits near r → ∞
        let mut data = vec![5u64; 40];
        data[0] = 2;
        data[1] = 8;
        data[2] = 2;
        data[3] = 8;
        data[4] = 1;
        data[5] = 9;
        let fit = nb_fit_mle(&data);
        match fit {
            Ok(f) => assert!(f.r >= 1.0 && f.p > 0.0 && f.p < 1.0),
            Err(e) => assert!(matches!(e, FitError::UnderdispersedData { .. }), "{e}"),
        }
    }

    #[test]
    fn sampler_mean() {
        let mut g = rng::seeded(1);
        let d = NegativeBinomial::new(1.0, 0.5).unwrap();
        let xs = d.sample(100_000, &mut g);
        let m = xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        assert!((m - 1.0).abs() < 0.02, "mean {m}");
        assert!(d.sample(0, &mut g).is_empty());
    }
}
