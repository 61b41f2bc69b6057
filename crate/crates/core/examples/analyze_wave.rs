//! The full procedure on the bundled national fixture: segment, fit, select,
//! pool, fit the Beta law of the limiting ratios, and write every artifact.
//!
//! Output goes to `$POLYA_OUT_DIR` or a temporary directory.

use std::path::{Path, PathBuf};

use polya_waves::ingestion::{clean_all, load_csv, to_daily, CleanConfig, Group, Schema};
use polya_waves::pipeline::{analyze_wave, write_outputs, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/european_synthetic.csv");
    let out = std::env::var_os("POLYA_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("polya-analyze-example"));

    let raw = load_csv(&path, Schema::National)?.records;
    let daily = raw.iter().map(to_daily).collect::<Result<Vec<_>, _>>()?;
    let (records, audit) = clean_all(&daily, &CleanConfig::default());
    println!("{} series, {} cleaned values", records.len(), audit.len());

    let config = PipelineConfig::default();
    for wave in [1, 2] {
        let analysis = analyze_wave(&records, Group::E, wave, &config)?;
        let report = &analysis.report;
        println!("{}", report.summary_line());
        if let Some(p) = &report.pooled {
            println!(
                "  mu_r = {:.3} ({:.3}, {:.3}), mu_p = {:.4}, pooled outliers {:?}",
                p.mu_r, p.ci_mu_r.0, p.ci_mu_r.1, p.mu_p, p.excluded_outlier_ids
            );
        }
        for s in report.per_series.iter().filter(|s| !s.selected).take(5) {
            println!("  not selected: {} ({:?}, best p {:?})", s.series_id, s.status, s.best_p);
        }
        let files = write_outputs(&analysis, &out, false)?;
        println!("  wrote {} and {} more files", files.report.display(), files.files.len());
    }
    Ok(())
}
