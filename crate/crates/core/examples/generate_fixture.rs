//! Generate data from urns with known composition, analyze it with the
//! generating windows, and compare the estimates with the truth.

use polya_waves::fixture::{generate, CountModel, FixtureConfig};
use polya_waves::ingestion::Group;
use polya_waves::pipeline::{analyze_wave_with_windows, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let configs = [
        ("urn limit law", FixtureConfig { days: 240, ..Default::default() }),
        (
            "NB(1.48, 0.0317)",
            FixtureConfig {
                days: 1000,
                waves: 1,
                counts: CountModel::NegBin { r: 1.48, p: 0.0317 },
                ..Default::default()
            },
        ),
    ];
    for (label, config) in configs {
        let fx = generate(&config)?;
        let truth = &fx.truth;
        let analysis =
            analyze_wave_with_windows(&fx.records, &truth.windows(1), Group::E, 1, &PipelineConfig::default())?;
        let report = analysis.report;
        let pooled = report.pooled.as_ref().expect("pooled statistics");
        let se_r = (pooled.sigma_r / pooled.n as f64).sqrt();
        let r_true = truth.entities[0].nb_r;
        println!("{label}: {}", report.summary_line());
        println!(
            "  mu_r = {:.3} +- {:.3} (truth {r_true}, {:+.1} SE)",
            pooled.mu_r,
            se_r,
            (pooled.mu_r - r_true) / se_r
        );
        if let Some(beta) = &report.beta {
            let (lo, hi) = beta.params.mean_ci();
            println!("  Beta mean {:.4} ({lo:.4}, {hi:.4}); rho0 = {:.4}", beta.params.mean(), truth.rho0);
        }
    }
    Ok(())
}
