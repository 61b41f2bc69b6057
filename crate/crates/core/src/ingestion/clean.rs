use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DayFlag, SeriesRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    /// Values above `Q3 + k * IQR` are removed.
    pub outlier_k: f64,
    pub remove_outliers: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            outlier_k: 3.0,
            remove_outliers: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanRule {
    Negative,
    Outlier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Confirmed,
    Tests,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub entity: String,
    pub date: NaiveDate,
    pub field: Field,
    pub rule: CleanRule,
    pub original_value: f64,
}

/// Type-7 quartiles (linear interpolation between order statistics).
fn quartiles(sorted: &[f64]) -> (f64, f64) {
    let q = |p: f64| {
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    (q(0.25), q(0.75))
}

/// Indices to remove from one field: negatives first, then repeated
/// `Q3 + k * IQR` passes over the surviving values until nothing changes.
fn removals(values: &[f64], flags: &[DayFlag], config: &CleanConfig) -> Vec<(usize, CleanRule)> {
    let mut out = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    for (i, (&v, &f)) in values.iter().zip(flags).enumerate() {
        if !f.is_observed() {
            continue;
        }
        if v < 0.0 {
            out.push((i, CleanRule::Negative));
        } else {
            alive.push(i);
        }
    }
    if !config.remove_outliers {
        return out;
    }
    while alive.len() >= 4 {
        let mut sorted: Vec<f64> = alive.iter().map(|&i| values[i]).collect();
        sorted.sort_by(f64::total_cmp);
        let (q1, q3) = quartiles(&sorted);
        let limit = q3 + config.outlier_k * (q3 - q1);
        let before = alive.len();
        alive.retain(|&i| {
            let keep = values[i] <= limit;
            if !keep {
                out.push((i, CleanRule::Outlier));
            }
            keep
        });
        if alive.len() == before {
            break;
        }
    }
    out.sort_unstable_by_key(|&(i, _)| i);
    out
}

/// Remove negative and outlying daily values and return the audit trail.
/// Removed days keep their date, hold zero and carry the matching flag, so
/// they add nothing to cumulative sums and are skipped by fits.
pub fn clean_with_audit(record: &SeriesRecord, config: &CleanConfig) -> (SeriesRecord, Vec<AuditEntry>) {
    let mut out = record.clone();
    let mut audit = Vec::new();
    for field in [Field::Confirmed, Field::Tests] {
        let (values, flags) = match field {
            Field::Confirmed => (&mut out.confirmed, &mut out.confirmed_flags),
            Field::Tests => (&mut out.tests, &mut out.tests_flags),
        };
        for (i, rule) in removals(values, flags, config) {
            audit.push(AuditEntry {
                entity: record.series_id.clone(),
                date: record.dates[i],
                field,
                rule,
                original_value: values[i],
            });
            values[i] = 0.0;
            flags[i] = match rule {
                CleanRule::Negative => DayFlag::RemovedNegative,
                CleanRule::Outlier => DayFlag::RemovedOutlier,
            };
        }
    }
    out.flag_confirmed_above_tests();
    (out, audit)
}

pub fn clean(record: &SeriesRecord, config: &CleanConfig) -> SeriesRecord {
    clean_with_audit(record, config).0
}

/// Clean every record in parallel; audit entries come back in record order.
pub fn clean_all(records: &[SeriesRecord], config: &CleanConfig) -> (Vec<SeriesRecord>, Vec<AuditEntry>) {
    let results: Vec<_> = records.par_iter().map(|r| clean_with_audit(r, config)).collect();
    let mut cleaned = Vec::with_capacity(records.len());
    let mut audit = Vec::new();
    for (r, a) in results {
        cleaned.push(r);
        audit.extend(a);
    }
    (cleaned, audit)
}

pub fn write_audit_log(path: impl AsRef<Path>, entries: &[AuditEntry]) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(entries).map_err(std::io::Error::other)?;
    std::fs::write(path, json + "\n")
}
