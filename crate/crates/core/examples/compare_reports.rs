//! Pooled parameters compared across waves and across the national and
//! regional groups with two-sample t-tests.

use std::path::Path;

use polya_waves::ingestion::{load_csv, to_daily, Group, Schema, SeriesRecord};
use polya_waves::pipeline::{analyze_wave, compare, AnalysisReport, PipelineConfig};
use polya_waves::stats_tests::TwoSampleVariance;

fn load(name: &str, schema: Schema) -> Result<Vec<SeriesRecord>, Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let records = load_csv(path, schema)?.records;
    Ok(records.iter().map(to_daily).collect::<Result<_, _>>()?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let national = load("european_synthetic.csv", Schema::National)?;
    let regional = load("regional_synthetic.csv", Schema::Regional)?;

    let mut reports: Vec<AnalysisReport> = Vec::new();
    for (records, group) in [(&national, Group::E), (&regional, Group::I)] {
        for wave in [1, 2] {
            let report = analyze_wave(records, group, wave, &config)?.report;
            println!("{}", report.summary_line());
            reports.push(report);
        }
    }

    let pairs = [(0, 1), (2, 3), (0, 2), (1, 3)];
    for (i, j) in pairs {
        for variance in [TwoSampleVariance::Welch, TwoSampleVariance::Pooled] {
            for t in compare(&reports[i], &reports[j], 0.05, variance)? {
                println!(
                    "{:<18} {:?}: t = {:>7.3}, dof {:>6.1}, p = {:.4}",
                    t.name, variance, t.result.statistic, t.result.dof_or_n, t.result.p_value
                );
            }
        }
    }
    Ok(())
}
