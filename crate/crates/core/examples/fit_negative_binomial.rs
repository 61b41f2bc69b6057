//! Maximum-likelihood negative binomial fit with Wald intervals, followed by
//! the two goodness-of-fit tests used to select a series.

use polya_waves::distributions::{nb_fit_mle, NegativeBinomial};
use polya_waves::rng;
use polya_waves::stats_tests::{chi2_gof, ks_test_discrete};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = NegativeBinomial::new(1.48, 0.0317)?;
    let mut rng = rng::seeded(42);
    let counts = truth.sample(1000, &mut rng);

    let fit = nb_fit_mle(&counts)?;
    println!("r = {:.3}  95% CI ({:.3}, {:.3})", fit.r, fit.ci_r.0, fit.ci_r.1);
    println!("p = {:.4} 95% CI ({:.4}, {:.4})", fit.p, fit.ci_p.0, fit.ci_p.1);
    println!("mean {:.1}, variance {:.1}, log-likelihood {:.2}", fit.mean(), fit.variance(), fit.log_likelihood);

    let dist = fit.distribution();
    let ks = ks_test_discrete(&counts, |k| dist.cdf(k), 0.01)?;
    let chi2 = chi2_gof(&counts, |k| dist.pmf(k), 2, 0.01)?;
    println!("KS  D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);
    println!("chi2 = {:.2} on {} dof, p = {:.3}", chi2.statistic, chi2.dof_or_n, chi2.p_value);
    println!("selected: {}", !ks.reject_null && !chi2.reject_null);

    // a Poisson-like sample sits at the edge of the parameter space
    let tight: Vec<u64> = (0..200).map(|i| 20 + (i % 3)).collect();
    match nb_fit_mle(&tight) {
        Ok(f) => println!("underdispersed sample: r = {:.3e}", f.r),
        Err(e) => println!("underdispersed sample: {e}"),
    }
    Ok(())
}
