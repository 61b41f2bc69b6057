//! Splitting a daily case series into its two largest infection waves.
//!
//! The series is smoothed, peaks are ranked by height among those with
//! enough topographic prominence, and each wave runs from the lowest point
//! before its peak to the lowest point after it. Between two waves the lowest
//! point of the valley separates them. Endpoints and peaks are then snapped
//! to the raw series within half a smoothing window.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when comparing smoothed values, so that ties
/// survive rescaling of the input.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Odd moving-average width in days.
    pub smoothing_window: usize,
    /// A peak must have prominence of at least this fraction of the global maximum.
    pub prominence_fraction: f64,
    pub min_wave_len: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 7,
            prominence_fraction: 0.1,
            min_wave_len: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveWindow {
    pub wave_index: u8,
    pub onset: usize,
    pub peak: usize,
    pub close: usize,
    /// Smoothed daily cases at the peak.
    pub peak_height: f64,
    /// Set on both windows when the first closes after the second opens.
    #[serde(default)]
    pub overlap: bool,
}

impl WaveWindow {
    pub fn len(&self) -> usize {
        self.close - self.onset + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, day: usize) -> bool {
        (self.onset..=self.close).contains(&day)
    }

    pub fn slice<'a, T>(&self, series: &'a [T]) -> &'a [T] {
        &series[self.onset..=self.close]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentError {
    #[error("no peak above the prominence threshold")]
    NoWaveFound,
    #[error("only one wave found (days {}..={})", .0.onset, .0.close)]
    SingleWave(WaveWindow),
    #[error("series has {len} days, need at least {need}")]
    SeriesTooShort { len: usize, need: usize },
    #[error("smoothing window must be odd and at least 1, got {0}")]
    InvalidWindow(usize),
}

/// Centered moving average; near the edges the window is truncated to the
/// days that exist.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return series.to_vec();
    }
    let half = window / 2;
    let n = series.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            series[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Local maxima of `s`; a plateau counts once, at its first index. Series
/// boundaries count as lower neighbours.
fn local_maxima(s: &[f64], tol: f64) -> Vec<usize> {
    let n = s.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && (s[j + 1] - s[i]).abs() <= tol {
            j += 1;
        }
        let rises = i == 0 || s[i - 1] < s[i] - tol;
        let falls = j == n - 1 || s[j + 1] < s[i] - tol;
        if rises && falls {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Height above the higher of the two lowest points reached before meeting
/// higher ground on either side. A side with no days does not count.
fn prominence(s: &[f64], peak: usize, tol: f64) -> f64 {
    let h = s[peak];
    let base = |side: &mut dyn Iterator<Item = &f64>| {
        side.take_while(|&&v| v <= h + tol).copied().reduce(f64::min)
    };
    let left = base(&mut s[..peak].iter().rev());
    let right = base(&mut s[peak + 1..].iter());
    match (left, right) {
        (Some(l), Some(r)) => h - l.max(r),
        (Some(m), None) | (None, Some(m)) => h - m,
        (None, None) => h,
    }
}

/// Index of the minimum of `s[lo..=hi]`, ties going to the index nearest `anchor`.
fn argmin_near(s: &[f64], lo: usize, hi: usize, anchor: usize, tol: f64) -> usize {
    let m = s[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
    (lo..=hi)
        .filter(|&i| s[i] <= m + tol)
        .min_by_key(|&i| i.abs_diff(anchor))
        .unwrap()
}

/// Index of the maximum of `s[lo..=hi]`, ties going to the earliest.
fn argmax_first(s: &[f64], lo: usize, hi: usize, tol: f64) -> usize {
    let m = s[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo..=hi).find(|&i| s[i] >= m - tol).unwrap()
}

struct Prepared<'a> {
    raw: &'a [f64],
    smooth: Vec<f64>,
    half: usize,
    raw_tol: f64,
    smooth_tol: f64,
}

impl Prepared<'_> {
    /// Endpoint from the smoothed argmin over `[lo, hi]`, snapped to the raw
    /// minimum within half a window, never crossing `anchor`.
    fn endpoint(&self, lo: usize, hi: usize, anchor: usize) -> usize {
        let coarse = argmin_near(&self.smooth, lo, hi, anchor, self.smooth_tol);
        let (a, b) = if coarse <= anchor {
            (coarse.saturating_sub(self.half).max(lo), (coarse + self.half).min(anchor))
        } else {
            (coarse.saturating_sub(self.half).max(anchor), (coarse + self.half).min(hi))
        };
        argmin_near(self.raw, a, b, anchor, self.raw_tol)
    }

    fn refine_peak(&self, p: usize, lo: usize, hi: usize) -> usize {
        let a = p.saturating_sub(self.half).max(lo);
        let b = (p + self.half).min(hi);
        argmax_first(self.raw, a, b, self.raw_tol)
    }

    fn window(&self, peak: usize, lo: usize, hi: usize) -> WaveWindow {
        let onset = self.endpoint(lo, peak, peak);
        let close = self.endpoint(peak, hi, peak);
        let refined = self.refine_peak(peak, onset, close);
        WaveWindow {
            wave_index: 1,
            onset,
            peak: refined,
            close,
            peak_height: self.smooth[peak],
            overlap: false,
        }
    }

    fn pair(&self, a: usize, b: usize) -> (WaveWindow, WaveWindow) {
        let last = self.raw.len() - 1;
        let (p1, p2) = (a.min(b), a.max(b));
        let mut w1 = self.window(p1, 0, p2);
        let mut w2 = self.window(p2, p1, last);
        w2.wave_index = 2;
        if w1.close > w2.onset {
            w1.overlap = true;
            w2.overlap = true;
        }
        (w1, w2)
    }
}

/// The two largest waves of `series` in chronological order.
///
/// Returns [`SegmentError::SingleWave`] carrying the window when only one
/// peak qualifies, so callers analysing the first wave can still proceed.
pub fn detect_waves(series: &[f64], config: &SegmentationConfig) -> Result<Vec<WaveWindow>, SegmentError> {
    let w = config.smoothing_window;
    if w == 0 || w % 2 == 0 {
        return Err(SegmentError::InvalidWindow(w));
    }
    let need = 2 * config.min_wave_len.max(1);
    if series.len() < need {
        return Err(SegmentError::SeriesTooShort {
            len: series.len(),
            need,
        });
    }
    let smoothed = smooth(series, w);
    let top = smoothed.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 || !top.is_finite() {
        return Err(SegmentError::NoWaveFound);
    }
    let raw_top = series.iter().copied().fold(0.0, f64::max);
    let prep = Prepared {
        raw: series,
        half: w / 2,
        raw_tol: TIE_TOL * raw_top,
        smooth_tol: TIE_TOL * top,
        smooth: smoothed,
    };
    let tol = prep.smooth_tol;
    let threshold = config.prominence_fraction * top;
    let mut candidates: Vec<usize> = local_maxima(&prep.smooth, tol)
        .into_iter()
        .filter(|&p| prep.smooth[p] > tol && prominence(&prep.smooth, p, tol) >= threshold - tol)
        .collect();
    if candidates.is_empty() {
        return Err(SegmentError::NoWaveFound);
    }
    // highest first; candidates are already in index order, so a stable
    // sort keeps the earlier date ahead on ties
    candidates.sort_by(|&a, &b| {
        let (ha, hb) = (prep.smooth[a], prep.smooth[b]);
        if (ha - hb).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            hb.total_cmp(&ha)
        }
    });
    let first = candidates[0];
    for &second in &candidates[1..] {
        let (w1, w2) = prep.pair(first, second);
        if w1.len() >= config.min_wave_len && w2.len() >= config.min_wave_len {
            return Ok(vec![w1, w2]);
        }
    }
    Err(SegmentError::SingleWave(prep.window(first, 0, series.len() - 1)))
}

/// One row of the window export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRow {
    pub series_id: String,
    pub wave_index: u8,
    pub onset_date: NaiveDate,
    pub peak_date: NaiveDate,
    pub close_date: NaiveDate,
}

impl WindowRow {
    pub fn new(series_id: &str, dates: &[NaiveDate], w: &WaveWindow) -> Self {
        Self {
            series_id: series_id.to_string(),
            wave_index: w.wave_index,
            onset_date: dates[w.onset],
            peak_date: dates[w.peak],
            close_date: dates[w.close],
        }
    }
    /// Index window on a series, or `None` if a date is missing or out of order.
    pub fn to_window(&self, dates: &[NaiveDate], values: &[f64]) -> Option<WaveWindow> {
        let find = |d: NaiveDate| dates.binary_search(&d).ok();
        let (onset, peak, close) = (find(self.onset_date)?, find(self.peak_date)?, find(self.close_date)?);
        if !(onset <= peak && peak <= close) {
            return None;
        }
        Some(WaveWindow {
            wave_index: self.wave_index,
            onset,
            peak,
            close,
            peak_height: *values.get(peak)?,
            overlap: false,
        })
    }
}

pub fn read_windows_csv<R: Read>(input: R) -> csv::Result<Vec<WindowRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Write windows as `series_id,wave_index,onset_date,peak_date,close_date`.
pub fn write_windows_csv<W: Write>(out: W, rows: &[WindowRow]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triangle rising from `onset` to `peak` and falling to `close`, zero outside.
    fn bump(series: &mut [f64], onset: usize, peak: usize, close: usize, height: f64) {
        for i in onset..=peak {
            series[i] = height * (i - onset) as f64 / (peak - onset) as f64;
        }
        for i in peak..=close {
            series[i] = height * (close - i) as f64 / (close - peak) as f64;
        }
    }

    fn brute_smooth(x: &[f64], w: usize) -> Vec<f64> {
        let h = (w / 2) as isize;
        (0..x.len() as isize)
            .map(|i| {
                let vals: Vec<f64> = (i - h..=i + h)
                    .filter(|&j| j >= 0 && j < x.len() as isize)
                    .map(|j| x[j as usize])
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            })
            .collect()
    }

    #[test]
    fn smoothing_examples() {
        let c = vec![4.0; 9];
        assert_eq!(smooth(&c, 7), c);
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(smooth(&x, 1), x.to_vec());
        let spike = [0.0, 0.0, 7.0, 0.0, 0.0];
        let s = smooth(&spike, 7);
        assert_eq!(s, brute_smooth(&spike, 7));
        // every truncated window holds the spike
        assert_eq!(s, vec![7.0 / 4.0, 7.0 / 5.0, 7.0 / 5.0, 7.0 / 5.0, 7.0 / 4.0]);
    }

    #[test]
    fn window_rows_round_trip() {
        let start = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let dates: Vec<NaiveDate> = (0..10).map(|i| start + chrono::Duration::days(i)).collect();
        let values: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let w = WaveWindow { wave_index: 2, onset: 1, peak: 4, close: 8, peak_height: 4.0, overlap: false };
        let mut buf = Vec::new();
        write_windows_csv(&mut buf, &[WindowRow::new("A", &dates, &w)]).unwrap();
        let rows = read_windows_csv(buf.as_slice()).unwrap();
        assert_eq!(rows[0].to_window(&dates, &values), Some(w));
        assert_eq!(rows[0].to_window(&dates[..5], &values), None);
    }

    #[test]
    fn two_triangles_are_recovered_exactly() {
        let mut x = vec![0.0; 160];
        bump(&mut x, 10, 40, 70, 100.0);
        bump(&mut x, 90, 115, 140, 80.0);
        let w = detect_waves(&x, &SegmentationConfig::default()).unwrap();
        assert_eq!((w[0].onset, w[0].peak, w[0].close), (10, 40, 70));
        assert_eq!((w[1].onset, w[1].peak, w[1].close), (90, 115, 140));
        assert_eq!((w[0].wave_index, w[1].wave_index), (1, 2));
        assert!(!w[0].overlap);
    }

    #[test]
    fn taller_second_wave_still_reported_in_order() {
        let mut x = vec![0.0; 160];
        bump(&mut x, 10, 40, 70, 50.0);
        bump(&mut x, 90, 115, 140, 80.0);
        let w = detect_waves(&x, &SegmentationConfig::default()).unwrap();
        assert_eq!(w[0].peak, 40);
        assert_eq!(w[1].peak, 115);
    }

    #[test]
    fn monotone_series_is_a_single_wave_to_the_end() {
        let x: Vec<f64> = (0..60).map(f64::from).collect();
        match detect_waves(&x, &SegmentationConfig::default()) {
            Err(SegmentError::SingleWave(w)) => {
                assert_eq!(w.close, 59);
                assert_eq!(w.peak, 59);
                assert_eq!(w.onset, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_zero_has_no_wave() {
        assert_eq!(
            detect_waves(&[0.0; 60], &SegmentationConfig::default()),
            Err(SegmentError::NoWaveFound)
        );
    }

    #[test]
    fn small_bumps_below_prominence_are_ignored() {
        let mut x = vec![0.0; 160];
        bump(&mut x, 10, 40, 70, 100.0);
        bump(&mut x, 100, 110, 120, 5.0);
        assert!(matches!(
            detect_waves(&x, &SegmentationConfig::default()),
            Err(SegmentError::SingleWave(_))
        ));
    }

    #[test]
    fn input_validation() {
        let cfg = SegmentationConfig::default();
        assert_eq!(
            detect_waves(&[1.0; 10], &cfg),
            Err(SegmentError::SeriesTooShort { len: 10, need: 42 })
        );
        let even = SegmentationConfig {
            smoothing_window: 6,
            ..cfg
        };
        assert_eq!(detect_waves(&[1.0; 50], &even), Err(SegmentError::InvalidWindow(6)));
    }

    #[test]
    fn csv_export() {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let dates: Vec<NaiveDate> = (0..10).map(|i| d0 + chrono::Days::new(i)).collect();
        let w = WaveWindow {
            wave_index: 1,
            onset: 1,
            peak: 4,
            close: 8,
            peak_height: 3.0,
            overlap: false,
        };
        let mut buf = Vec::new();
        write_windows_csv(&mut buf, &[WindowRow::new("Italy", &dates, &w)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "series_id,wave_index,onset_date,peak_date,close_date\nItaly,1,2020-03-02,2020-03-05,2020-03-09\n"
        );
    }
}
