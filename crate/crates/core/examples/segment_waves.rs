//! Wave windows of the bundled national fixture, detected from the daily
//! confirmed counts and written as a window CSV.

use std::path::Path;

use polya_waves::ingestion::{load_csv, Schema};
use polya_waves::segmentation::{detect_waves, smooth, write_windows_csv, SegmentError, SegmentationConfig, WindowRow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/european_synthetic.csv");
    let records = load_csv(&path, Schema::National)?.records;
    let config = SegmentationConfig::default();

    let mut rows = Vec::new();
    for rec in records.iter().take(8) {
        match detect_waves(&rec.confirmed, &config) {
            Ok(waves) => {
                for w in &waves {
                    println!(
                        "{:<10} wave {}: {} .. {} .. {}  ({} days)",
                        rec.series_id,
                        w.wave_index,
                        rec.dates[w.onset],
                        rec.dates[w.peak],
                        rec.dates[w.close],
                        w.len()
                    );
                    rows.push(WindowRow::new(&rec.series_id, &rec.dates, w));
                }
            }
            Err(SegmentError::SingleWave(w)) => println!("{:<10} single wave {}..{}", rec.series_id, w.onset, w.close),
            Err(e) => println!("{:<10} {e}", rec.series_id),
        }
    }

    let s = smooth(&records[0].confirmed, config.smoothing_window);
    let top = s.iter().cloned().fold(f64::MIN, f64::max);
    println!("\nsmoothed maximum of {}: {top:.1}", records[0].series_id);

    println!();
    write_windows_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
