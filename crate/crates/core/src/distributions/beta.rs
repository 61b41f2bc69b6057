use rand::Rng;
use rand_distr::{Beta as BetaSampler, Distribution};
use serde::{Deserialize, Serialize};

use super::{covariance_from_hessian, wald, Covariance, FitError, MAX_ITERATIONS, SHAPE_MAX, SHAPE_MIN};
use crate::special::{bisect, digamma, inc_beta, ln_beta, trigamma};

const MIN_BETA_SAMPLES: usize = 5;

/// `Beta(r, theta)` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaDist {
    pub r: f64,
    pub theta: f64,
}

impl BetaDist {
    pub fn new(r: f64, theta: f64) -> Result<Self, FitError> {
        if !(r.is_finite() && r > 0.0 && theta.is_finite() && theta > 0.0) {
            return Err(FitError::InvalidParameter(format!(
                "Beta shapes must be positive, got ({r}, {theta})"
            )));
        }
        Ok(Self { r, theta })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        (self.r - 1.0) * x.ln() + (self.theta - 1.0) * (-x).ln_1p() - ln_beta(self.r, self.theta)
    }

    /// Density for `x` in `(0, 1)`; zero outside.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            // the open endpoints only matter for shapes below one
            if (x == 0.0 && self.r == 1.0) || (x == 1.0 && self.theta == 1.0) {
                return (-ln_beta(self.r, self.theta)).exp();
            }
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }

    /// Regularized incomplete beta `I_x(r, theta)`, clamped outside `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        inc_beta(self.r, self.theta, x.clamp(0.0, 1.0))
    }

    pub fn quantile(&self, prob: f64) -> f64 {
        if prob <= 0.0 {
            return 0.0;
        }
        if prob >= 1.0 {
            return 1.0;
        }
        bisect(|x| self.cdf(x) - prob, 0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.r / (self.r + self.theta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.r + self.theta;
        self.r * self.theta / (s * s * (s + 1.0))
    }

    /// Gradient of `ln pdf(x)` with respect to `(r, theta)`.
    pub fn ln_pdf_gradient(&self, x: f64) -> [f64; 2] {
        let ds = digamma(self.r + self.theta);
        [x.ln() - digamma(self.r) + ds, (-x).ln_1p() - digamma(self.theta) + ds]
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let sampler = BetaSampler::new(self.r, self.theta).expect("valid Beta shapes");
        (0..n).map(|_| sampler.sample(rng)).collect()
    }
}

/// Density of `dist` at `x`, rejecting points outside `[0, 1]`.
pub fn beta_pdf(dist: &BetaDist, x: f64) -> Result<f64, FitError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(FitError::Domain(format!("Beta density needs x in [0,1], got {x}")));
    }
    Ok(dist.pdf(x))
}

/// Distribution function of `dist` at `x`, rejecting points outside `[0, 1]`.
pub fn beta_cdf(dist: &BetaDist, x: f64) -> Result<f64, FitError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(FitError::Domain(format!("Beta cdf needs x in [0,1], got {x}")));
    }
    Ok(dist.cdf(x))
}

pub fn beta_sample<R: Rng + ?Sized>(dist: &BetaDist, n: usize, rng: &mut R) -> Vec<f64> {
    dist.sample(n, rng)
}

/// Maximum-likelihood Beta fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub r: f64,
    pub theta: f64,
    #[serde(with = "crate::float_serde::pair")]
    pub ci_r: (f64, f64),
    #[serde(with = "crate::float_serde::pair")]
    pub ci_theta: (f64, f64),
    /// Observed-information covariance of `(r, theta)`.
    #[serde(with = "crate::float_serde::matrix")]
    pub covariance: Covariance,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub iterations: usize,
}

impl BetaParams {
    pub fn distribution(&self) -> BetaDist {
        BetaDist {
            r: self.r,
            theta: self.theta,
        }
    }

    /// `r / (r + theta)`.
    pub fn mean(&self) -> f64 {
        self.r / (self.r + self.theta)
    }

    /// Delta-method 95% interval for the mean, clamped to `[0, 1]`.
    pub fn mean_ci(&self) -> (f64, f64) {
        let s = self.r + self.theta;
        let g = [self.theta / (s * s), -self.r / (s * s)];
        let c = &self.covariance;
        let var = g[0] * g[0] * c[0][0] + 2.0 * g[0] * g[1] * c[0][1] + g[1] * g[1] * c[1][1];
        wald(self.mean(), var, 0.0, 1.0)
    }
}

/// Method-of-moments starting point `(r, theta)`.
pub fn beta_moments_init(samples: &[f64]) -> Result<(f64, f64), FitError> {
    if samples.len() < 2 {
        return Err(FitError::TooFewSamples {
            got: samples.len(),
            need: 2,
        });
    }
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let v = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if v <= 0.0 {
        return Err(FitError::DegenerateSample);
    }
    let common = m * (1.0 - m) / v - 1.0;
    if common <= 0.0 {
        return Ok((1.0, 1.0));
    }
    Ok((
        (m * common).clamp(SHAPE_MIN, SHAPE_MAX),
        ((1.0 - m) * common).clamp(SHAPE_MIN, SHAPE_MAX),
    ))
}

struct Sufficient {
    n: f64,
    sum_ln_x: f64,
    sum_ln_1mx: f64,
}

impl Sufficient {
    fn log_likelihood(&self, r: f64, t: f64) -> f64 {
        (r - 1.0) * self.sum_ln_x + (t - 1.0) * self.sum_ln_1mx - self.n * ln_beta(r, t)
    }

    fn gradient(&self, r: f64, t: f64) -> [f64; 2] {
        let ds = digamma(r + t);
        [
            self.n * (ds - digamma(r)) + self.sum_ln_x,
            self.n * (ds - digamma(t)) + self.sum_ln_1mx,
        ]
    }

    fn hessian(&self, r: f64, t: f64) -> [[f64; 2]; 2] {
        let ts = trigamma(r + t);
        [
            [self.n * (ts - trigamma(r)), self.n * ts],
            [self.n * ts, self.n * (ts - trigamma(t))],
        ]
    }
}

/// Fit `Beta(r, theta)` by maximum likelihood: two-dimensional Newton on the
/// digamma score equations from the method-of-moments start, with step
/// halving to keep every iterate inside the box and the likelihood rising.
pub fn beta_fit_mle(samples: &[f64]) -> Result<BetaParams, FitError> {
    if samples.len() < MIN_BETA_SAMPLES {
        return Err(FitError::TooFewSamples {
            got: samples.len(),
            need: MIN_BETA_SAMPLES,
        });
    }
    for (index, &value) in samples.iter().enumerate() {
        if value == 0.0 || value == 1.0 {
            return Err(FitError::BoundaryValue { index, value });
        }
        if !(value > 0.0 && value < 1.0) {
            return Err(FitError::Domain(format!("sample {index} = {value} lies outside (0,1)")));
        }
    }
    let (mut r, mut t) = beta_moments_init(samples)?;
    let suff = Sufficient {
        n: samples.len() as f64,
        sum_ln_x: samples.iter().map(|x| x.ln()).sum(),
        sum_ln_1mx: samples.iter().map(|x| (-x).ln_1p()).sum(),
    };

    let mut ll = suff.log_likelihood(r, t);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let g = suff.gradient(r, t);
        let h = suff.hessian(r, t);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        // Newton direction -H^{-1} g
        let dr = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dt = -(-h[0][1] * g[0] + h[0][0] * g[1]) / det;
        if !(dr.is_finite() && dt.is_finite()) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let (nr, nt) = (r + step * dr, t + step * dt);
            if (SHAPE_MIN..=SHAPE_MAX).contains(&nr) && (SHAPE_MIN..=SHAPE_MAX).contains(&nt) {
                let nll = suff.log_likelihood(nr, nt);
                if nll >= ll - 1e-12 * ll.abs().max(1.0) {
                    accepted = Some((nr, nt, nll));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((nr, nt, nll)) = accepted else { break };
        let moved = ((nr - r) / r).abs().max(((nt - t) / t).abs());
        r = nr;
        t = nt;
        ll = nll;
        if moved < 1e-13 {
            converged = true;
            break;
        }
    }
    let g = suff.gradient(r, t);
    if !converged && g[0].abs().max(g[1].abs()) > 1e-8 * suff.n {
        return Err(FitError::NonConvergence { iterations });
    }

    let covariance = covariance_from_hessian(suff.hessian(r, t))
        .unwrap_or([[f64::INFINITY, 0.0], [0.0, f64::INFINITY]]);
    Ok(BetaParams {
        r,
        theta: t,
        ci_r: wald(r, covariance[0][0], 0.0, f64::INFINITY),
        ci_theta: wald(t, covariance[1][1], 0.0, f64::INFINITY),
        covariance,
        log_likelihood: ll,
        n_obs: samples.len(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_case() {
        let b = BetaDist::new(1.0, 1.0).unwrap();
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert_relative_eq!(beta_pdf(&b, x).unwrap(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(beta_cdf(&b, x).unwrap(), x, epsilon = 1e-14);
        }
        assert!(beta_cdf(&b, 1.5).is_err());
        assert!(beta_pdf(&b, -0.1).is_err());
    }

    #[test]
    fn symmetric_median() {
        let b = BetaDist::new(2.0, 2.0).unwrap();
        assert_relative_eq!(b.cdf(0.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(b.quantile(0.5), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn reference_shape_mean() {
        let b = BetaDist::new(1.80, 34.92).unwrap();
        assert_relative_eq!(b.mean(), 1.80 / 36.72, epsilon = 1e-15);
        assert!((b.mean() - 0.049).abs() < 5e-4);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // composite Simpson on a substitution that tames the endpoint behaviour
        for &(a, t) in &[(2.0, 35.0), (1.8, 34.92), (5.0, 1.0), (3.0, 3.0)] {
            let b = BetaDist::new(a, t).unwrap();
            let n = 200_000;
            let h = 1.0 / n as f64;
            let mut s = b.pdf(0.0) + b.pdf(1.0);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * b.pdf(i as f64 * h);
            }
            assert!((s * h / 3.0 - 1.0).abs() < 1e-8, "({a},{t}) integral {}", s * h / 3.0);
        }
    }

    #[test]
    fn fit_recovers_parameters() {
        let mut g = rng::seeded(31);
        let data = BetaDist::new(2.0, 35.0).unwrap().sample(10_000, &mut g);
        let fit = beta_fit_mle(&data).unwrap();
        assert!((1.9..=2.1).contains(&fit.r), "r = {}", fit.r);
        assert!(fit.ci_theta.0 < fit.theta && fit.theta < fit.ci_theta.1);
        assert_eq!(fit.mean(), fit.r / (fit.r + fit.theta));
    }

    #[test]
    fn symmetric_moments_start_symmetric() {
        let (r, t) = beta_moments_init(&[0.2, 0.8]).unwrap();
        assert_relative_eq!(r, t, epsilon = 1e-15);
        let fit = beta_fit_mle(&[0.2, 0.8, 0.2, 0.8, 0.2, 0.8]).unwrap();
        assert_relative_eq!(fit.r, fit.theta, max_relative = 1e-9);
        assert_relative_eq!(fit.mean(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn boundary_and_degenerate_samples_rejected() {
        assert_eq!(
            beta_fit_mle(&[0.1, 0.2, 0.0, 0.3, 0.4]),
            Err(FitError::BoundaryValue { index: 2, value: 0.0 })
        );
        assert!(matches!(beta_fit_mle(&[0.1, 0.2, 1.3, 0.3, 0.4]), Err(FitError::Domain(_))));
        assert_eq!(beta_fit_mle(&[0.3; 6]), Err(FitError::DegenerateSample));
        assert!(matches!(beta_fit_mle(&[0.3, 0.4]), Err(FitError::TooFewSamples { .. })));
    }

    #[test]
    fn score_vanishes_at_optimum() {
        let mut g = rng::seeded(4);
        let data = BetaDist::new(2.0, 35.0).unwrap().sample(500, &mut g);
        let fit = beta_fit_mle(&data).unwrap();
        let ll = |r: f64, t: f64| {
            data.iter().map(|&x| BetaDist { r, theta: t }.ln_pdf(x)).sum::<f64>()
        };
        let (hr, ht) = (1e-5 * fit.r, 1e-5 * fit.theta);
        let dr = (ll(fit.r + hr, fit.theta) - ll(fit.r - hr, fit.theta)) / (2.0 * hr);
        let dt = (ll(fit.r, fit.theta + ht) - ll(fit.r, fit.theta - ht)) / (2.0 * ht);
        assert!(dr.abs() < 1e-6 && dt.abs() < 1e-6, "dr={dr} dt={dt}");
    }

    #[test]
    fn sampler_mean() {
        let mut g = rng::seeded(12);
        let xs = BetaDist::new(1.0, 1.0).unwrap().sample(100_000, &mut g);
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - 0.5).abs() < 0.005);
    }
}
