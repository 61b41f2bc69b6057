//! Per-wave analysis of a group of series: negative binomial fits with
//! goodness-of-fit selection, pooled parameter statistics, a Beta fit on the
//! limiting confirmed/tested ratios and the resulting incidence rate.

mod output;

pub use output::{render_svg, write_outputs, OutputFiles};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::distributions::{beta_fit_mle, nb_fit_mle, BetaParams, NegBinParams};
use crate::ingestion::{ratio_series, ConvergenceCriterion, Group, RatioSeries, SeriesRecord};
use crate::segmentation::{detect_waves, SegmentError, SegmentationConfig, WaveWindow};
use crate::special::student_t_quantile;
use crate::stats_tests::{
    chi2_gof, chi2_gof_continuous, ks_bootstrap_nb, ks_test, ks_test_discrete, t_test_one_sample,
    t_test_two_sample_with, TestResult, TwoSampleVariance,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("no input series")]
    NoSeries,
    #[error("need at least {need} selected series, got {got}")]
    InsufficientSeries { got: usize, need: usize },
    #[error("wave must be 1 or 2, got {0}")]
    InvalidWave(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Level of the KS and chi-square selection tests.
    pub gof_alpha: f64,
    /// Level of the t-tests.
    pub t_alpha: f64,
    /// Pooled outliers satisfy `|r_i - median| > mad_multiplier * MAD`.
    pub mad_multiplier: f64,
    /// Windows with fewer observed days are not fitted.
    pub min_observations: usize,
    /// Fewer selected series than this leaves the Beta section out.
    pub min_selected: usize,
    pub two_sample: TwoSampleVariance,
    /// Parametric-bootstrap KS replicates per series; 0 disables.
    pub bootstrap_replicates: usize,
    pub seed: u64,
    pub segmentation: SegmentationConfig,
    pub convergence: ConvergenceCriterion,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gof_alpha: 0.01,
            t_alpha: 0.05,
            mad_multiplier: 10.0,
            min_observations: 10,
            min_selected: 5,
            two_sample: TwoSampleVariance::Welch,
            bootstrap_replicates: 0,
            seed: 0,
            segmentation: SegmentationConfig::default(),
            convergence: ConvergenceCriterion::default(),
        }
    }
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesStatus {
    Selected,
    Rejected,
    Errored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub series_id: String,
    pub status: SeriesStatus,
    pub window: Option<WaveWindow>,
    pub n_obs: usize,
    pub fit: Option<NegBinParams>,
    pub ks: Option<TestResult>,
    pub chi2: Option<TestResult>,
    /// Larger of the two selection p-values.
    pub best_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_bootstrap_p: Option<f64>,
    pub selected: bool,
    /// Counted in the pooled statistics (selected and not a pooled outlier).
    pub in_pool: bool,
    pub r_infinity: Option<f64>,
    pub ratio_converged: Option<bool>,
    pub error: Option<String>,
}

impl SeriesResult {
    fn errored(series_id: &str, window: Option<WaveWindow>, n_obs: usize, error: String) -> Self {
        Self {
            series_id: series_id.to_string(),
            status: SeriesStatus::Errored,
            window,
            n_obs,
            fit: None,
            ks: None,
            chi2: None,
            best_p: None,
            ks_bootstrap_p: None,
            selected: false,
            in_pool: false,
            r_infinity: None,
            ratio_converged: None,
            error: Some(error),
        }
    }
}

/// Mean, sample variance and t interval of one fitted parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledParam {
    pub mean: f64,
    pub variance: f64,
    pub ci: (f64, f64),
}

impl PooledParam {
    fn from_values(xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = student_t_quantile(0.975, n - 1.0) * (variance / n).sqrt();
        Some(Self {
            mean,
            variance,
            ci: (mean - half, mean + half),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledStats {
    pub n: usize,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub ci_mu_r: (f64, f64),
    pub mu_p: f64,
    pub sigma_p: f64,
    pub ci_mu_p: (f64, f64),
    pub median_r: f64,
    pub mad_r: f64,
    pub excluded_outlier_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSection {
    pub params: BetaParams,
    pub ks: TestResult,
    pub chi2: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi2_error: Option<String>,
    /// Series whose limiting ratio sat on 0 or 1 and was left out.
    pub excluded_boundary_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoInfinity {
    pub value: f64,
    pub ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    pub result: TestResult,
}

/// A recorded reason the report is incomplete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportIssue {
    TooFewSelected { selected: usize, need: usize },
    TooFewBetaInputs { usable: usize, need: usize },
    BetaFitFailed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub group: Group,
    pub wave: u8,
    pub config_fingerprint: String,
    pub per_series: Vec<SeriesResult>,
    pub pooled: Option<PooledStats>,
    pub beta: Option<BetaSection>,
    pub rho_infinity: Option<RhoInfinity>,
    pub cross_tests: Vec<NamedTest>,
    pub issues: Vec<ReportIssue>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn selected_count(&self) -> usize {
        self.per_series.iter().filter(|s| s.selected).count()
    }

    /// `(r_i, p_i)` of the series counted in the pooled statistics.
    pub fn pooled_params(&self) -> (Vec<f64>, Vec<f64>) {
        self.per_series
            .iter()
            .filter(|s| s.in_pool)
            .filter_map(|s| s.fit.as_ref())
            .map(|f| (f.r, f.p))
            .unzip()
    }

    pub fn is_complete(&self) -> bool {
        self.issues.is_empty()
    }

    /// `group=E wave=1 selected=27/33 rho_inf=0.049 (0.03–0.07)`
    pub fn summary_line(&self) -> String {
        let rho = match &self.rho_infinity {
            Some(r) => format!("{:.3} ({:.2}\u{2013}{:.2})", r.value, r.ci.0, r.ci.1),
            None => "NA".to_string(),
        };
        format!(
            "group={} wave={} selected={}/{} rho_inf={}",
            self.group,
            self.wave,
            self.selected_count(),
            self.per_series.len(),
            rho
        )
    }
}

/// Data behind a report that the plot and trajectory files need.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub series_id: String,
    pub counts: Vec<u64>,
    pub ratio: Option<RatioSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveAnalysis {
    pub report: AnalysisReport,
    pub series: Vec<SeriesData>,
}

fn window_for(record: &SeriesRecord, wave: u8, config: &PipelineConfig) -> Result<WaveWindow, String> {
    match detect_waves(&record.confirmed, &config.segmentation) {
        Ok(ws) => Ok(ws[wave as usize - 1]),
        Err(SegmentError::SingleWave(w)) if wave == 1 => Ok(w),
        Err(e) => Err(e.to_string()),
    }
}

fn analyze_series(
    record: &SeriesRecord,
    window: Result<WaveWindow, String>,
    index: usize,
    config: &PipelineConfig,
) -> (SeriesResult, SeriesData) {
    let mut data = SeriesData {
        series_id: record.series_id.clone(),
        counts: Vec::new(),
        ratio: None,
    };
    let window = match window {
        Ok(w) => w,
        Err(e) => return (SeriesResult::errored(&record.series_id, None, 0, e), data),
    };
    let counts = record.fit_counts(&window);
    let n = counts.len();
    let ratio = ratio_series(record, &window, &config.convergence);
    data.ratio = ratio.as_ref().ok().cloned();
    data.counts = counts;
    let counts = &data.counts;
    if n < config.min_observations {
        let e = format!("window has {n} observed days, need {}", config.min_observations);
        return (SeriesResult::errored(&record.series_id, Some(window), n, e), data);
    }
    let fit = match nb_fit_mle(counts) {
        Ok(f) => f,
        Err(e) => {
            let e = format!("negative binomial fit: {e}");
            return (SeriesResult::errored(&record.series_id, Some(window), n, e), data);
        }
    };
    let dist = fit.distribution();
    let ks = ks_test_discrete(counts, |k| dist.cdf(k), config.gof_alpha);
    let chi2 = chi2_gof(counts, |k| dist.pmf(k), 2, config.gof_alpha);
    let (ks, chi2) = match (ks, chi2) {
        (Ok(k), Ok(c)) => (k, c),
        (Err(e), _) => {
            let e = format!("KS test: {e}");
            return (SeriesResult::errored(&record.series_id, Some(window), n, e), data);
        }
        (_, Err(e)) => {
            let e = format!("chi-square test: {e}");
            return (SeriesResult::errored(&record.series_id, Some(window), n, e), data);
        }
    };
    let selected = !ks.reject_null && !chi2.reject_null;
    let ks_bootstrap_p = (config.bootstrap_replicates > 0)
        .then(|| ks_bootstrap_nb(counts, config.bootstrap_replicates, config.seed ^ (index as u64) << 32).ok())
        .flatten();
    let (r_infinity, ratio_converged) = match &ratio {
        Ok(rs) => (rs.r_infinity, Some(rs.converged)),
        Err(_) => (None, None),
    };
    let result = SeriesResult {
        series_id: record.series_id.clone(),
        status: if selected { SeriesStatus::Selected } else { SeriesStatus::Rejected },
        window: Some(window),
        n_obs: n,
        best_p: Some(ks.p_value.max(chi2.p_value)),
        fit: Some(fit),
        ks: Some(ks),
        chi2: Some(chi2),
        ks_bootstrap_p,
        selected,
        in_pool: false,
        r_infinity,
        ratio_converged,
        error: ratio.err().map(|e| format!("ratio: {e}")),
    };
    (result, data)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mark the pooled set on `per_series` and compute the pooled statistics.
fn pool(per_series: &mut [SeriesResult], config: &PipelineConfig) -> Option<PooledStats> {
    let selected: Vec<usize> = (0..per_series.len()).filter(|&i| per_series[i].selected).collect();
    let rs: Vec<f64> = selected.iter().map(|&i| per_series[i].fit.as_ref().unwrap().r).collect();
    if rs.is_empty() {
        return None;
    }
    let med = median(&rs);
    let deviations: Vec<f64> = rs.iter().map(|r| (r - med).abs()).collect();
    let mad = median(&deviations);
    let mut excluded = Vec::new();
    for (&i, &dev) in selected.iter().zip(&deviations) {
        // a zero MAD would flag every value off the median
        let outlier = mad > 0.0 && dev > config.mad_multiplier * mad;
        per_series[i].in_pool = !outlier;
        if outlier {
            excluded.push(per_series[i].series_id.clone());
        }
    }
    let (r, p): (Vec<f64>, Vec<f64>) = per_series
        .iter()
        .filter(|s| s.in_pool)
        .map(|s| s.fit.as_ref().map(|f| (f.r, f.p)).unwrap())
        .unzip();
    let pr = PooledParam::from_values(&r)?;
    let pp = PooledParam::from_values(&p)?;
    Some(PooledStats {
        n: r.len(),
        mu_r: pr.mean,
        sigma_r: pr.variance,
        ci_mu_r: pr.ci,
        mu_p: pp.mean,
        sigma_p: pp.variance,
        ci_mu_p: pp.ci,
        median_r: med,
        mad_r: mad,
        excluded_outlier_ids: excluded,
    })
}

fn fit_beta(per_series: &[SeriesResult], config: &PipelineConfig, issues: &mut Vec<ReportIssue>) -> Option<BetaSection> {
    let mut values = Vec::new();
    let mut boundary = Vec::new();
    for s in per_series.iter().filter(|s| s.selected) {
        match s.r_infinity {
            Some(x) if x > 0.0 && x < 1.0 => values.push(x),
            Some(_) => {
                log::warn!("{}: limiting ratio on the boundary, left out of the Beta fit", s.series_id);
                boundary.push(s.series_id.clone());
            }
            None => {}
        }
    }
    if values.len() < config.min_selected {
        issues.push(ReportIssue::TooFewBetaInputs {
            usable: values.len(),
            need: config.min_selected,
        });
        return None;
    }
    let params = match beta_fit_mle(&values) {
        Ok(p) => p,
        Err(e) => {
            issues.push(ReportIssue::BetaFitFailed { reason: e.to_string() });
            return None;
        }
    };
    let dist = params.distribution();
    let ks = ks_test(&values, |x| dist.cdf(x), config.gof_alpha).expect("at least five finite values");
    let (chi2, chi2_error) = match chi2_gof_continuous(&values, |x| dist.cdf(x), 10, 2, config.gof_alpha) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Some(BetaSection {
        params,
        ks,
        chi2,
        chi2_error,
        excluded_boundary_ids: boundary,
    })
}

/// Run the full analysis of one wave.
///
/// Windows are found by [`detect_waves`] unless `windows` supplies one for a
/// series. Series are processed in `series_id` order whatever the input
/// order, so the report is deterministic.
pub fn analyze_wave_with_windows(
    records: &[SeriesRecord],
    windows: &BTreeMap<String, WaveWindow>,
    group: Group,
    wave: u8,
    config: &PipelineConfig,
) -> Result<WaveAnalysis, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::NoSeries);
    }
    if !(1..=2).contains(&wave) {
        return Err(PipelineError::InvalidWave(wave));
    }
    let mut order: Vec<&SeriesRecord> = records.iter().collect();
    order.sort_by(|a, b| a.series_id.cmp(&b.series_id));
    let results: Vec<(SeriesResult, SeriesData)> = order
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let window = match windows.get(&rec.series_id) {
                Some(w) => Ok(*w),
                None => window_for(rec, wave, config),
            };
            analyze_series(rec, window, i, config)
        })
        .collect();
    let (mut per_series, series): (Vec<SeriesResult>, Vec<SeriesData>) = results.into_iter().unzip();

    let mut issues = Vec::new();
    let mut notes = vec![
        "sharpness tests are one-sample t-tests of the centred estimates against zero; \
         their mean is zero by construction, so they only flag degenerate spreads"
            .to_string(),
    ];
    let pooled = pool(&mut per_series, config);
    let selected = per_series.iter().filter(|s| s.selected).count();
    let beta = if selected < config.min_selected {
        issues.push(ReportIssue::TooFewSelected {
            selected,
            need: config.min_selected,
        });
        None
    } else {
        fit_beta(&per_series, config, &mut issues)
    };
    let rho_infinity = beta.as_ref().map(|b| RhoInfinity {
        value: b.params.mean(),
        ci: b.params.mean_ci(),
    });

    let mut cross_tests = Vec::new();
    let (rs, ps): (Vec<f64>, Vec<f64>) = per_series
        .iter()
        .filter(|s| s.in_pool)
        .filter_map(|s| s.fit.as_ref())
        .map(|f| (f.r, f.p))
        .unzip();
    if let Some(pooled) = &pooled {
        let centred = |xs: &[f64], m: f64| xs.iter().map(|x| x - m).collect::<Vec<_>>();
        for (name, xs, m) in [("sharpness_r", &rs, pooled.mu_r), ("sharpness_p", &ps, pooled.mu_p)] {
            if let Ok(t) = t_test_one_sample(&centred(xs, m), 0.0, config.t_alpha) {
                cross_tests.push(NamedTest {
                    name: name.to_string(),
                    result: t,
                });
            }
        }
        if let Some(b) = &beta {
            if let Ok(t) = t_test_one_sample(&rs, b.params.r, config.t_alpha) {
                cross_tests.push(NamedTest {
                    name: "mu_r_vs_beta_r".to_string(),
                    result: t,
                });
            }
        }
    }
    notes.extend(crate::reference::consistency_note(group, wave));
    let unconverged = per_series.iter().filter(|s| s.selected && s.ratio_converged == Some(false)).count();
    if unconverged > 0 {
        notes.push(format!("{unconverged} selected series had not converged by the window close"));
    }
    Ok(WaveAnalysis {
        report: AnalysisReport {
            schema_version: SCHEMA_VERSION,
            group,
            wave,
            config_fingerprint: fingerprint(config),
            per_series,
            pooled,
            beta,
            rho_infinity,
            cross_tests,
            issues,
            notes,
        },
        series,
    })
}

/// [`analyze_wave_with_windows`] with every window found by segmentation.
pub fn analyze_wave(
    records: &[SeriesRecord],
    group: Group,
    wave: u8,
    config: &PipelineConfig,
) -> Result<WaveAnalysis, PipelineError> {
    analyze_wave_with_windows(records, &BTreeMap::new(), group, wave, config)
}

/// Two-sample tests of the pooled `r_i` and `p_i` of two reports.
pub fn compare(
    a: &AnalysisReport,
    b: &AnalysisReport,
    alpha: f64,
    variance: TwoSampleVariance,
) -> Result<Vec<NamedTest>, PipelineError> {
    let (ra, pa) = a.pooled_params();
    let (rb, pb) = b.pooled_params();
    let got = ra.len().min(rb.len());
    if got < 2 {
        return Err(PipelineError::InsufficientSeries { got, need: 2 });
    }
    let label = |r: &AnalysisReport| format!("{}{}", r.group, r.wave);
    let mut out = Vec::new();
    for (param, xa, xb) in [("r", &ra, &rb), ("p", &pa, &pb)] {
        if let Ok(t) = t_test_two_sample_with(xa, xb, alpha, variance) {
            out.push(NamedTest {
                name: format!("mu_{param}_{}_vs_{}", label(a), label(b)),
                result: t,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::NegativeBinomial;
    use crate::rng;
    use chrono::NaiveDate;

    fn full_window(n: usize) -> WaveWindow {
        WaveWindow {
            wave_index: 1,
            onset: 0,
            peak: 0,
            close: n - 1,
            peak_height: 0.0,
            overlap: false,
        }
    }

    fn nb_records(count: usize, len: usize, r: f64, p: f64, seed: u64) -> Vec<SeriesRecord> {
        let start = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let dist = NegativeBinomial::new(r, p).unwrap();
        (0..count)
            .map(|i| {
                let mut g = rng::stream(seed, i as u64);
                let c: Vec<f64> = dist.sample(len, &mut g).into_iter().map(|x| x as f64).collect();
                let s: Vec<f64> = c.iter().map(|x| (x * 20.0).max(1.0)).collect();
                SeriesRecord::daily(&format!("S{i:02}"), Group::E, start, c, s)
            })
            .collect()
    }

    fn windows(records: &[SeriesRecord]) -> BTreeMap<String, WaveWindow> {
        records.iter().map(|r| (r.series_id.clone(), full_window(r.len()))).collect()
    }

    #[test]
    fn mad_rule_on_reference_spread() {
        // r_i of the selected first-wave countries in the reference tables
        let rs = [
            1.70, 1.11, 3.29, 1.12, 0.70, 0.59, 0.83, 1.73, 1.35, 1.06, 1.30, 0.69, 0.62, 1.04, 1.08, 1.27,
            0.50, 0.77, 17.57, 1.02, 4.20, 0.62, 1.10, 0.94, 3.32, 2.57, 22.04,
        ];
        let med = median(&rs);
        let mad = median(&rs.iter().map(|r| (r - med).abs()).collect::<Vec<_>>());
        let k = PipelineConfig::default().mad_multiplier;
        let out: Vec<f64> = rs.iter().copied().filter(|r| (r - med).abs() > k * mad).collect();
        assert_eq!(out, vec![17.57, 22.04]);
    }

    #[test]
    fn report_invariants_hold() {
        let recs = nb_records(12, 200, 2.0, 0.05, 4);
        let a = analyze_wave_with_windows(&recs, &windows(&recs), Group::E, 1, &PipelineConfig::default()).unwrap();
        let rep = &a.report;
        assert_eq!(rep.per_series.len(), 12);
        for s in &rep.per_series {
            if let (Some(ks), Some(c2)) = (&s.ks, &s.chi2) {
                assert_eq!(s.selected, !ks.reject_null && !c2.reject_null);
            }
        }
        let beta = rep.beta.as_ref().unwrap();
        assert_eq!(rep.rho_infinity.as_ref().unwrap().value, beta.params.r / (beta.params.r + beta.params.theta));
        assert!(rep.summary_line().starts_with("group=E wave=1 selected="));
    }

    #[test]
    fn identical_series_share_a_fate() {
        let one = nb_records(1, 150, 3.0, 0.1, 8).remove(0);
        let recs: Vec<SeriesRecord> = (0..6)
            .map(|i| SeriesRecord {
                series_id: format!("T{i}"),
                ..one.clone()
            })
            .collect();
        let a = analyze_wave_with_windows(&recs, &windows(&recs), Group::E, 1, &PipelineConfig::default()).unwrap();
        let sel: Vec<bool> = a.report.per_series.iter().map(|s| s.selected).collect();
        assert!(sel.iter().all(|&s| s == sel[0]));
        if sel[0] {
            assert_eq!(a.report.pooled.as_ref().unwrap().sigma_r, 0.0);
        }
    }

    #[test]
    fn too_few_selected_keeps_report_without_beta() {
        let recs = nb_records(3, 150, 3.0, 0.1, 9);
        let a = analyze_wave_with_windows(&recs, &windows(&recs), Group::E, 1, &PipelineConfig::default()).unwrap();
        assert!(a.report.beta.is_none());
        assert!(matches!(a.report.issues[0], ReportIssue::TooFewSelected { need: 5, .. }));
    }

    #[test]
    fn short_windows_are_errored() {
        let recs = nb_records(5, 8, 3.0, 0.1, 10);
        let a = analyze_wave_with_windows(&recs, &windows(&recs), Group::E, 1, &PipelineConfig::default()).unwrap();
        assert!(a.report.per_series.iter().all(|s| s.status == SeriesStatus::Errored));
    }

    #[test]
    fn compare_with_self_gives_unit_p() {
        let recs = nb_records(8, 200, 2.0, 0.05, 11);
        let a = analyze_wave_with_windows(&recs, &windows(&recs), Group::E, 1, &PipelineConfig::default()).unwrap();
        let tests = compare(&a.report, &a.report, 0.05, TwoSampleVariance::Welch).unwrap();
        assert_eq!(tests[0].result.p_value, 1.0);
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { gof_alpha: 0.05, ..a };
        assert_eq!(fingerprint(&a), fingerprint(&a));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }
}
