//! The hypothesis tests on their own: one- and two-sample KS, binned
//! chi-square, and one- and two-sample t-tests.

use polya_waves::distributions::{BetaDist, NegativeBinomial};
use polya_waves::rng;
use polya_waves::stats_tests::{
    chi2_gof, chi2_gof_continuous, ks_test, ks_two_sample, t_test_one_sample, t_test_two_sample,
    t_test_two_sample_with, TestResult, TwoSampleVariance,
};

fn show(name: &str, t: &TestResult) {
    println!(
        "{name:<28} stat = {:>8.4}  p = {:.4}  {}",
        t.statistic,
        t.p_value,
        if t.reject_null { "reject" } else { "keep" }
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rng::seeded(11);
    let beta = BetaDist::new(2.0, 35.0)?;
    let x = beta.sample(300, &mut rng);
    let y = BetaDist::new(2.0, 20.0)?.sample(300, &mut rng);

    show("KS x ~ Beta(2, 35)", &ks_test(&x, |v| beta.cdf(v), 0.01)?);
    show("KS y ~ Beta(2, 35)", &ks_test(&y, |v| beta.cdf(v), 0.01)?);
    show("KS two-sample x vs y", &ks_two_sample(&x, &y, 0.01)?);
    show("chi2 x, 10 bins", &chi2_gof_continuous(&x, |v| beta.cdf(v), 10, 0, 0.01)?);

    let nb = NegativeBinomial::new(3.0, 0.2)?;
    let counts = nb.sample(400, &mut rng);
    show("chi2 counts ~ NB(3, 0.2)", &chi2_gof(&counts, |k| nb.pmf(k), 0, 0.01)?);

    show("t one-sample mean(x) = 2/37", &t_test_one_sample(&x, 2.0 / 37.0, 0.05)?);
    show("t Welch x vs y", &t_test_two_sample(&x, &y, 0.05)?);
    show(
        "t pooled x vs y",
        &t_test_two_sample_with(&x, &y, 0.05, TwoSampleVariance::Pooled)?,
    );
    Ok(())
}
