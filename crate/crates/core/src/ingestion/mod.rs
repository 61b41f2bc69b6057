//! Loading national and regional case/test CSVs into aligned daily series.
//!
//! National files carry `date,entity,new_cases,new_tests`; regional files
//! carry `date,region,new_confirmed,new_tests`. Dates are ISO-8601. Extra
//! columns are ignored.

mod clean;
#[cfg(feature = "fetch")]
mod fetch;
mod ratio;

pub use clean::{clean, clean_all, clean_with_audit, write_audit_log, AuditEntry, CleanConfig, CleanRule, Field};
#[cfg(feature = "fetch")]
pub use fetch::fetch_csv;
pub use ratio::{ratio_series, ConvergenceCriterion, RatioSeries};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmentation::WaveWindow;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("file has no data rows")]
    EmptyFile,
    #[error("series `{0}` is not on a weekly cadence")]
    NotWeekly(String),
    #[error("series `{0}` has no tests up to the window close")]
    ZeroTests(String),
    #[error("window {onset}..={close} lies outside a series of {len} days")]
    WindowOutOfRange { onset: usize, close: usize, len: usize },
    #[error("fetch failed: {0}")]
    Fetch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    National,
    Regional,
}

impl Schema {
    /// Names of the entity, confirmed and tests columns.
    pub fn columns(self) -> [&'static str; 3] {
        match self {
            Schema::National => ["entity", "new_cases", "new_tests"],
            Schema::Regional => ["region", "new_confirmed", "new_tests"],
        }
    }

    pub fn header(self) -> String {
        let [e, c, t] = self.columns();
        format!("date,{e},{c},{t}")
    }

    pub fn default_group(self) -> Group {
        match self {
            Schema::National => Group::E,
            Schema::Regional => Group::I,
        }
    }
}

impl FromStr for Schema {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "national" => Ok(Schema::National),
            "regional" => Ok(Schema::Regional),
            other => Err(format!("unknown schema `{other}` (national|regional)")),
        }
    }
}

/// Country-level (`E`) or region-level (`I`) data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    E,
    I,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::E => "E",
            Group::I => "I",
        })
    }
}

impl FromStr for Group {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "E" | "e" => Ok(Group::E),
            "I" | "i" => Ok(Group::I),
            other => Err(format!("unknown group `{other}` (E|I)")),
        }
    }
}

/// Where a day's value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayFlag {
    Raw,
    SmoothedFromWeekly,
    RemovedOutlier,
    RemovedNegative,
    /// No value reported; stored as zero.
    Missing,
}

impl DayFlag {
    /// True for values that were actually observed and kept.
    pub fn is_observed(self) -> bool {
        matches!(self, DayFlag::Raw | DayFlag::SmoothedFromWeekly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Daily,
    Weekly,
}

impl Cadence {
    /// Weekly when every consecutive pair of dates is exactly seven days apart.
    pub fn detect(dates: &[NaiveDate]) -> Cadence {
        let weekly = dates.len() >= 2 && dates.windows(2).all(|w| (w[1] - w[0]).num_days() == 7);
        if weekly {
            Cadence::Weekly
        } else {
            Cadence::Daily
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestWarning {
    /// Same entity and date seen twice; the later row was kept.
    DuplicateDate { date: NaiveDate, line: u64 },
    /// Confirmed cases above tests on this date.
    ConfirmedExceedsTests { date: NaiveDate },
}

/// A row that could not be used, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

/// One entity's daily confirmed cases and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub series_id: String,
    pub group: Group,
    pub dates: Vec<NaiveDate>,
    pub confirmed: Vec<f64>,
    pub tests: Vec<f64>,
    pub confirmed_flags: Vec<DayFlag>,
    pub tests_flags: Vec<DayFlag>,
    pub warnings: Vec<IngestWarning>,
}

impl SeriesRecord {
    /// A record of raw daily values starting at `start`.
    pub fn daily(series_id: &str, group: Group, start: NaiveDate, confirmed: Vec<f64>, tests: Vec<f64>) -> Self {
        assert_eq!(confirmed.len(), tests.len(), "confirmed and tests must align");
        let n = confirmed.len();
        let mut rec = Self {
            series_id: series_id.to_string(),
            group,
            dates: (0..n as u64).map(|i| start + Days::new(i)).collect(),
            confirmed,
            tests,
            confirmed_flags: vec![DayFlag::Raw; n],
            tests_flags: vec![DayFlag::Raw; n],
            warnings: Vec::new(),
        };
        rec.flag_confirmed_above_tests();
        rec
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn cadence(&self) -> Cadence {
        Cadence::detect(&self.dates)
    }

    /// Observed confirmed counts inside `window`, rounded to integers.
    /// Removed and missing days are left out.
    pub fn fit_counts(&self, window: &WaveWindow) -> Vec<u64> {
        (window.onset..=window.close.min(self.len().saturating_sub(1)))
            .filter(|&i| self.confirmed_flags[i].is_observed())
            .map(|i| self.confirmed[i].max(0.0).round() as u64)
            .collect()
    }

    /// Every value multiplied by `factor`, flags untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.confirmed.iter_mut().for_each(|x| *x *= factor);
        out.tests.iter_mut().for_each(|x| *x *= factor);
        out
    }

    fn flag_confirmed_above_tests(&mut self) {
        self.warnings.retain(|w| !matches!(w, IngestWarning::ConfirmedExceedsTests { .. }));
        for i in 0..self.len() {
            if self.confirmed_flags[i].is_observed()
                && self.tests_flags[i].is_observed()
                && self.confirmed[i] > self.tests[i]
            {
                self.warnings.push(IngestWarning::ConfirmedExceedsTests { date: self.dates[i] });
            }
        }
    }

    pub fn duplicate_count(&self) -> usize {
        self.warnings
            .iter()
            .filter(|w| matches!(w, IngestWarning::DuplicateDate { .. }))
            .count()
    }
}

/// Records parsed from one file plus the rows that were rejected.
#[derive(Debug, Clone, Default)]
pub struct LoadOutput {
    pub records: Vec<SeriesRecord>,
    pub rejected: Vec<RowDiagnostic>,
}

/// Parse a CSV file; see [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, schema: Schema) -> Result<LoadOutput, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

fn parse_value(cell: &str) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("unparseable count `{cell}`")),
    }
}

/// Parse CSV text into one record per entity, sorted by entity id and then
/// by date. Rows with a bad date or count are rejected with a diagnostic;
/// empty count cells become missing values. A repeated (entity, date) keeps
/// the later row and records a warning.
pub fn read_csv<R: Read>(input: R, schema: Schema) -> Result<LoadOutput, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(IngestError::EmptyFile);
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let [entity_col, confirmed_col, tests_col] = schema.columns();
    let (di, ei, ci, ti) = (find("date")?, find(entity_col)?, find(confirmed_col)?, find(tests_col)?);

    type Row = (Option<f64>, Option<f64>);
    let mut by_entity: BTreeMap<String, (BTreeMap<NaiveDate, Row>, Vec<IngestWarning>)> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut rows = 0usize;
    for (idx, result) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        rows += 1;
        let rec = match result {
            Ok(r) => r,
            Err(e) => {
                rejected.push(RowDiagnostic {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let parsed = (|| {
            let date = NaiveDate::parse_from_str(field(di), "%Y-%m-%d")
                .map_err(|_| format!("unparseable date `{}`", field(di)))?;
            let entity = field(ei);
            if entity.is_empty() {
                return Err("empty entity".to_string());
            }
            Ok((date, entity.to_string(), parse_value(field(ci))?, parse_value(field(ti))?))
        })();
        match parsed {
            Ok((date, entity, c, t)) => {
                let (days, warnings) = by_entity.entry(entity).or_default();
                if days.insert(date, (c, t)).is_some() {
                    log::warn!("duplicate date {date} at line {line}; keeping the later row");
                    warnings.push(IngestWarning::DuplicateDate { date, line });
                }
            }
            Err(reason) => rejected.push(RowDiagnostic { line, reason }),
        }
    }
    if rows == 0 {
        return Err(IngestError::EmptyFile);
    }
    let group = schema.default_group();
    let records = by_entity
        .into_iter()
        .map(|(series_id, (days, warnings))| {
            let n = days.len();
            let mut rec = SeriesRecord {
                series_id,
                group,
                dates: Vec::with_capacity(n),
                confirmed: Vec::with_capacity(n),
                tests: Vec::with_capacity(n),
                confirmed_flags: Vec::with_capacity(n),
                tests_flags: Vec::with_capacity(n),
                warnings,
            };
            for (date, (c, t)) in days {
                rec.dates.push(date);
                rec.confirmed.push(c.unwrap_or(0.0));
                rec.tests.push(t.unwrap_or(0.0));
                rec.confirmed_flags.push(if c.is_some() { DayFlag::Raw } else { DayFlag::Missing });
                rec.tests_flags.push(if t.is_some() { DayFlag::Raw } else { DayFlag::Missing });
            }
            rec.flag_confirmed_above_tests();
            rec
        })
        .collect();
    Ok(LoadOutput { records, rejected })
}

/// Insert every absent day between the first and last date with zero
/// confirmed, zero tests and the `Missing` flag.
pub fn normalize(record: &SeriesRecord) -> SeriesRecord {
    let (Some(&first), Some(&last)) = (record.dates.first(), record.dates.last()) else {
        return record.clone();
    };
    let n = (last - first).num_days() as usize + 1;
    let mut out = SeriesRecord {
        dates: (0..n as u64).map(|i| first + Days::new(i)).collect(),
        confirmed: vec![0.0; n],
        tests: vec![0.0; n],
        confirmed_flags: vec![DayFlag::Missing; n],
        tests_flags: vec![DayFlag::Missing; n],
        ..record.clone()
    };
    for (i, date) in record.dates.iter().enumerate() {
        let j = (*date - first).num_days() as usize;
        out.confirmed[j] = record.confirmed[i];
        out.tests[j] = record.tests[i];
        out.confirmed_flags[j] = record.confirmed_flags[i];
        out.tests_flags[j] = record.tests_flags[i];
    }
    out
}

/// Spread weekly totals over their seven days (the reported date and the six
/// before it). Each day gets `total / 7` rounded down and the last day also
/// takes the remainder, so weekly sums are preserved exactly.
pub fn weekly_to_daily(record: &SeriesRecord) -> Result<SeriesRecord, IngestError> {
    if record.cadence() != Cadence::Weekly {
        return Err(IngestError::NotWeekly(record.series_id.clone()));
    }
    let n = record.len() * 7;
    let start = record.dates[0] - Days::new(6);
    let mut out = SeriesRecord {
        dates: (0..n as u64).map(|i| start + Days::new(i)).collect(),
        confirmed: Vec::with_capacity(n),
        tests: Vec::with_capacity(n),
        confirmed_flags: Vec::with_capacity(n),
        tests_flags: Vec::with_capacity(n),
        ..record.clone()
    };
    let spread = |total: f64, flag: DayFlag, values: &mut Vec<f64>, flags: &mut Vec<DayFlag>| {
        let total = total.round() as i64;
        let (q, rem) = (total.div_euclid(7), total.rem_euclid(7));
        let flag = if flag == DayFlag::Raw { DayFlag::SmoothedFromWeekly } else { flag };
        for day in 0..7 {
            values.push((q + if day == 6 { rem } else { 0 }) as f64);
            flags.push(flag);
        }
    };
    for i in 0..record.len() {
        spread(record.confirmed[i], record.confirmed_flags[i], &mut out.confirmed, &mut out.confirmed_flags);
        spread(record.tests[i], record.tests_flags[i], &mut out.tests, &mut out.tests_flags);
    }
    out.flag_confirmed_above_tests();
    Ok(out)
}

/// Weekly cadence is expanded to daily, then gaps are filled.
pub fn to_daily(record: &SeriesRecord) -> Result<SeriesRecord, IngestError> {
    let daily = if record.cadence() == Cadence::Weekly {
        weekly_to_daily(record)?
    } else {
        record.clone()
    };
    Ok(normalize(&daily))
}

/// Config-driven removal of whole entities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntityFilter {
    pub exclude: Vec<String>,
    /// Entities whose population is known and below this are dropped.
    pub min_population: Option<f64>,
    pub population: BTreeMap<String, f64>,
    /// Drop entities that never report a test.
    pub require_tests: bool,
}

impl EntityFilter {
    /// Why `record` is dropped, or `None` to keep it.
    pub fn reason(&self, record: &SeriesRecord) -> Option<String> {
        if self.exclude.iter().any(|e| e == &record.series_id) {
            return Some("excluded by name".into());
        }
        if let (Some(min), Some(&pop)) = (self.min_population, self.population.get(&record.series_id)) {
            if pop < min {
                return Some(format!("population {pop} below {min}"));
            }
        }
        if self.require_tests && !record.tests_flags.iter().zip(&record.tests).any(|(f, &t)| f.is_observed() && t > 0.0) {
            return Some("no test data".into());
        }
        None
    }

    /// Split into kept records and `(series_id, reason)` for dropped ones.
    pub fn apply(&self, records: Vec<SeriesRecord>) -> (Vec<SeriesRecord>, Vec<(String, String)>) {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for r in records {
            match self.reason(&r) {
                Some(why) => dropped.push((r.series_id, why)),
                None => kept.push(r),
            }
        }
        (kept, dropped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn three_rows_one_record() {
        let csv = "date,entity,new_cases,new_tests\n2020-03-03,Italy,5,50\n2020-03-01,Italy,1,10\n2020-03-02,Italy,3,30\n";
        let out = read_csv(csv.as_bytes(), Schema::National).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.series_id, "Italy");
        assert_eq!(r.group, Group::E);
        assert_eq!(r.dates, vec![d("2020-03-01"), d("2020-03-02"), d("2020-03-03")]);
        assert_eq!(r.confirmed, vec![1.0, 3.0, 5.0]);
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn duplicate_keeps_last_and_warns() {
        let csv = "date,region,new_confirmed,new_tests\n2020-03-01,Lazio,1,10\n2020-03-01,Lazio,7,70\n";
        let out = read_csv(csv.as_bytes(), Schema::Regional).unwrap();
        let r = &out.records[0];
        assert_eq!(r.confirmed, vec![7.0]);
        assert_eq!(r.duplicate_count(), 1);
        assert_eq!(r.group, Group::I);
    }

    #[test]
    fn header_and_row_errors() {
        assert!(matches!(read_csv("".as_bytes(), Schema::National), Err(IngestError::EmptyFile)));
        assert!(matches!(
            read_csv("date,entity,new_cases,new_tests\n".as_bytes(), Schema::National),
            Err(IngestError::EmptyFile)
        ));
        match read_csv("date,entity,new_cases\n2020-01-01,A,1\n".as_bytes(), Schema::National) {
            Err(IngestError::MissingColumn(c)) => assert_eq!(c, "new_tests"),
            other => panic!("{other:?}"),
        }
        let csv = "date,entity,new_cases,new_tests\n2020-13-01,A,1,2\n2020-01-01,A,x,2\n2020-01-02,A,3,\n";
        let out = read_csv(csv.as_bytes(), Schema::National).unwrap();
        assert_eq!(out.rejected.len(), 2);
        assert_eq!(out.rejected[0].line, 2);
        assert_eq!(out.records[0].tests_flags, vec![DayFlag::Missing]);
    }

    #[test]
    fn entities_sorted_and_extra_columns_ignored() {
        let csv = "iso,date,entity,new_cases,new_tests\nX,2020-01-01,b,1,2\nY,2020-01-01,a,1,2\nZ,2020-01-01,c,1,2\n";
        let out = read_csv(csv.as_bytes(), Schema::National).unwrap();
        let ids: Vec<_> = out.records.iter().map(|r| r.series_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn gaps_are_filled_and_flagged() {
        let csv = "date,entity,new_cases,new_tests\n2020-03-01,A,1,10\n2020-03-04,A,2,20\n";
        let rec = &read_csv(csv.as_bytes(), Schema::National).unwrap().records[0];
        let n = normalize(rec);
        assert_eq!(n.len(), 4);
        assert_eq!(n.confirmed, vec![1.0, 0.0, 0.0, 2.0]);
        assert_eq!(n.confirmed_flags[1], DayFlag::Missing);
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn weekly_spread_and_remainder() {
        let rec = SeriesRecord {
            dates: vec![d("2020-03-08"), d("2020-03-15")],
            confirmed: vec![70.0, 72.0],
            tests: vec![700.0, 701.0],
            confirmed_flags: vec![DayFlag::Raw; 2],
            tests_flags: vec![DayFlag::Raw; 2],
            ..SeriesRecord::daily("A", Group::E, d("2020-03-08"), vec![], vec![])
        };
        let daily = weekly_to_daily(&rec).unwrap();
        assert_eq!(daily.len(), 14);
        assert_eq!(daily.dates[0], d("2020-03-02"));
        assert_eq!(&daily.confirmed[..7], &[10.0; 7]);
        assert_eq!(&daily.confirmed[7..13], &[10.0; 6]);
        assert_eq!(daily.confirmed[13], 12.0);
        assert!(daily.confirmed_flags.iter().all(|&f| f == DayFlag::SmoothedFromWeekly));
        let weekly: Vec<f64> = daily.tests.chunks(7).map(|c| c.iter().sum()).collect();
        assert_eq!(weekly, vec![700.0, 701.0]);
        let daily_rec = SeriesRecord::daily("A", Group::E, d("2020-03-01"), vec![1.0; 3], vec![2.0; 3]);
        assert!(matches!(weekly_to_daily(&daily_rec), Err(IngestError::NotWeekly(_))));
    }

    #[test]
    fn confirmed_above_tests_is_flagged_not_rejected() {
        let r = SeriesRecord::daily("A", Group::E, d("2020-03-01"), vec![5.0, 1.0], vec![2.0, 3.0]);
        assert_eq!(r.warnings, vec![IngestWarning::ConfirmedExceedsTests { date: d("2020-03-01") }]);
    }

    #[test]
    fn filters() {
        let a = SeriesRecord::daily("Albania", Group::E, d("2020-03-01"), vec![1.0], vec![0.0]);
        let b = SeriesRecord::daily("Malta", Group::E, d("2020-03-01"), vec![1.0], vec![4.0]);
        let c = SeriesRecord::daily("Spain", Group::E, d("2020-03-01"), vec![1.0], vec![4.0]);
        let f = EntityFilter {
            min_population: Some(1e6),
            population: [("Malta".to_string(), 5e5), ("Spain".to_string(), 4.7e7)].into(),
            require_tests: true,
            ..Default::default()
        };
        let (kept, dropped) = f.apply(vec![a, b, c]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].series_id, "Spain");
        assert_eq!(dropped.len(), 2);
    }
}
