//! Loading a messy CSV: a weekly entity, a duplicated date, a negative
//! correction, a reporting spike and an unparseable row.

use polya_waves::ingestion::{clean_with_audit, read_csv, to_daily, CleanConfig, Schema};

const CSV: &str = "\
date,entity,new_cases,new_tests
2020-03-01,Alpha,4,40
2020-03-02,Alpha,6,55
2020-03-03,Alpha,5,50
2020-03-03,Alpha,7,60
2020-03-05,Alpha,-12,48
2020-03-06,Alpha,6,52
2020-03-07,Alpha,250,58
2020-03-08,Alpha,5,49
2020-03-09,Alpha,4,
2020-03-10,Alpha,not-a-number,40
2020-03-07,Beta,70,700
2020-03-14,Beta,84,800
2020-03-21,Beta,63,650
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loaded = read_csv(CSV.as_bytes(), Schema::National)?;
    for bad in &loaded.rejected {
        println!("rejected line {}: {}", bad.line, bad.reason);
    }
    for rec in &loaded.records {
        println!(
            "{}: {} rows, cadence {:?}, {} duplicate date(s)",
            rec.series_id,
            rec.len(),
            rec.cadence(),
            rec.duplicate_count()
        );
        let daily = to_daily(rec)?;
        let (clean, audit) = clean_with_audit(&daily, &CleanConfig::default());
        for a in &audit {
            println!("  removed {:?} {:?} on {}: {}", a.field, a.rule, a.date, a.original_value);
        }
        for t in 0..clean.len() {
            println!(
                "  {} {:>6} {:>6}  {:?}",
                clean.dates[t], clean.confirmed[t], clean.tests[t], clean.confirmed_flags[t]
            );
        }
    }
    Ok(())
}
