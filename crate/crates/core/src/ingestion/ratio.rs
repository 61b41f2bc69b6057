use serde::{Deserialize, Serialize};

use super::{IngestError, SeriesRecord};
use crate::segmentation::WaveWindow;

/// When the cumulative ratio counts as settled: its relative change stays
/// below `tolerance` on each of the last `days` days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceCriterion {
    pub days: usize,
    pub tolerance: f64,
}

impl Default for ConvergenceCriterion {
    fn default() -> Self {
        Self {
            days: 7,
            tolerance: 0.01,
        }
    }
}

/// Cumulative confirmed over cumulative tests across a wave window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    /// Index of the first day, within the record.
    pub onset: usize,
    /// One entry per window day; absent until the first test is recorded.
    pub r_n: Vec<Option<f64>>,
    pub converged: bool,
    /// Ratio at the window close.
    pub r_infinity: Option<f64>,
}

/// `R_n = sum c / sum s` from the window onset to each day.
///
/// `r_infinity` is always the value at the close; `converged` only reports
/// whether the final days had settled.
pub fn ratio_series(
    record: &SeriesRecord,
    window: &WaveWindow,
    cutoff: &ConvergenceCriterion,
) -> Result<RatioSeries, IngestError> {
    if window.close >= record.len() || window.onset > window.close {
        return Err(IngestError::WindowOutOfRange {
            onset: window.onset,
            close: window.close,
            len: record.len(),
        });
    }
    let mut c_sum = 0.0;
    let mut s_sum = 0.0;
    let r_n: Vec<Option<f64>> = (window.onset..=window.close)
        .map(|i| {
            c_sum += record.confirmed[i];
            s_sum += record.tests[i];
            (s_sum > 0.0).then(|| c_sum / s_sum)
        })
        .collect();
    let Some(&Some(r_infinity)) = r_n.last() else {
        return Err(IngestError::ZeroTests(record.series_id.clone()));
    };
    let tail: Vec<f64> = r_n.iter().rev().take(cutoff.days + 1).map_while(|r| *r).collect();
    let converged = tail.len() == cutoff.days + 1
        && tail.windows(2).all(|w| {
            let (later, earlier) = (w[0], w[1]);
            let change = (later - earlier).abs();
            if earlier > 0.0 {
                change / earlier < cutoff.tolerance
            } else {
                change == 0.0
            }
        });
    Ok(RatioSeries {
        onset: window.onset,
        r_n,
        converged,
        r_infinity: Some(r_infinity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::Group;
    use chrono::NaiveDate;

    fn window(onset: usize, close: usize) -> WaveWindow {
        WaveWindow {
            wave_index: 1,
            onset,
            peak: onset,
            close,
            peak_height: 0.0,
            overlap: false,
        }
    }

    fn rec(c: Vec<f64>, s: Vec<f64>) -> SeriesRecord {
        SeriesRecord::daily("A", Group::E, NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(), c, s)
    }

    #[test]
    fn equal_series_give_unit_ratio() {
        let r = rec(vec![3.0; 10], vec![3.0; 10]);
        let rs = ratio_series(&r, &window(0, 9), &Default::default()).unwrap();
        assert!(rs.r_n.iter().all(|&x| x == Some(1.0)));
        assert_eq!(rs.r_infinity, Some(1.0));
    }

    #[test]
    fn constant_ratio_converges() {
        let r = rec(vec![1.0; 10], vec![10.0; 10]);
        let rs = ratio_series(&r, &window(0, 9), &Default::default()).unwrap();
        assert!(rs.converged);
        assert!((rs.r_infinity.unwrap() - 0.1).abs() < 1e-15);
        // too few days to judge
        let short = ratio_series(&r, &window(0, 5), &Default::default()).unwrap();
        assert!(!short.converged);
    }

    #[test]
    fn late_jump_is_not_converged() {
        let mut c = vec![1.0; 20];
        c[19] = 30.0;
        let r = rec(c, vec![10.0; 20]);
        let rs = ratio_series(&r, &window(0, 19), &Default::default()).unwrap();
        assert!(!rs.converged);
        assert!((rs.r_infinity.unwrap() - 49.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn leading_zero_tests_leave_gaps_and_all_zero_is_an_error() {
        let r = rec(vec![0.0, 1.0, 2.0], vec![0.0, 5.0, 5.0]);
        let rs = ratio_series(&r, &window(0, 2), &Default::default()).unwrap();
        assert_eq!(rs.r_n[0], None);
        assert_eq!(rs.r_n[2], Some(0.3));
        let z = rec(vec![1.0; 3], vec![0.0; 3]);
        assert!(matches!(ratio_series(&z, &window(0, 2), &Default::default()), Err(IngestError::ZeroTests(_))));
        assert!(matches!(
            ratio_series(&z, &window(0, 5), &Default::default()),
            Err(IngestError::WindowOutOfRange { .. })
        ));
    }
}
