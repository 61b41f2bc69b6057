//! Run a Polya urn, check the closed-form identity for `rho_n`, and compare
//! replicated end states with the negative binomial and Beta limit laws.
//!
//! cargo run --release --example simulate_urn

use polya_waves::distributions::{beta_fit_mle, BetaDist, NegativeBinomial};
use polya_waves::stats_tests::{ks_test, ks_test_discrete};
use polya_waves::urn::{self, UrnConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = UrnConfig::new(10_000, 500, 50).with_steps(200).with_seed(7);
    let traj = urn::simulate(&config)?;
    println!(
        "one run: {} white draws in {} steps, Z_n = {:.4}, rho_n = {:.5}",
        traj.white_draw_total(),
        traj.len(),
        traj.z_series.last().unwrap(),
        traj.rho_series.last().unwrap()
    );
    println!("largest gap to the closed form: {:.2e}", traj.max_identity_gap().unwrap());

    let law = urn::limit_params(&config, config.steps)?;
    println!("limit laws: NB({}, {:.3}), Beta({}, {})", law.r, law.p, law.r, law.theta);

    let ends = urn::replicate_terminals(&config, 10_000)?;
    let draws: Vec<u64> = ends.iter().map(|t| t.white_draws).collect();
    let nb = NegativeBinomial::new(law.r, law.p)?;
    let ks = ks_test_discrete(&draws, |k| nb.cdf(k), 0.01)?;
    println!("white-draw counts vs NB: D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);

    // Z_n needs a long horizon before it looks continuous
    let long = config.with_steps(5000);
    let zs: Vec<f64> = urn::replicate_terminals(&long, 2000)?.iter().map(|t| t.z).collect();
    let beta = BetaDist::new(law.r, law.theta)?;
    let ks = ks_test(&zs, |x| beta.cdf(x), 0.01)?;
    let fit = beta_fit_mle(&zs)?;
    println!(
        "Z after 5000 steps vs Beta: D = {:.4}, p = {:.3}; refit Beta({:.2}, {:.1}) with mean {:.4} (rho0 = {})",
        ks.statistic,
        ks.p_value,
        fit.r,
        fit.theta,
        fit.mean(),
        law.rho0
    );

    let drift = urn::martingale_check(&config.with_steps(100), &[1, 10, 100], 10_000)?;
    for row in &drift.rows {
        println!("n = {:>3}: mean drift {:+.2e} (se {:.1e})", row.n, row.mean_drift, row.std_error);
    }
    Ok(())
}
