//! Files written for one analysed wave.
//!
//! ```text
//! report_E_w1.json            full report
//! table_series_E_w1.csv       per-series fits and selection p-values
//! table_beta_E_w1.csv         Beta fit, rho_inf and pooled means
//! ratios_E_w1.csv             R_n trajectories
//! plots/E_w1/<id>_pmf.csv     observed frequency vs fitted pmf with 95% band
//! plots/E_w1/<id>_cdf.csv     empirical vs fitted cdf with 95% bands
//! plots/E_w1/beta.csv         Beta pdf and cdf on a grid
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::distributions::{BetaParams, NegBinParams, NegativeBinomial};
use crate::special::Z_975;

use super::{AnalysisReport, SeriesData, WaveAnalysis};

const BETA_GRID: usize = 200;

/// Paths of everything [`write_outputs`] produced, in writing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputFiles {
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

/// Delta-method standard error of `f(r, p)` from the fit covariance.
fn delta_se(fit: &NegBinParams, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (hr, hp) = (1e-6 * fit.r.max(1e-3), 1e-6 * fit.p.min(1.0 - fit.p).max(1e-9));
    let dr = (f(fit.r + hr, fit.p) - f(fit.r - hr, fit.p)) / (2.0 * hr);
    let dp = (f(fit.r, fit.p + hp) - f(fit.r, fit.p - hp)) / (2.0 * hp);
    let c = &fit.covariance;
    (dr * dr * c[0][0] + 2.0 * dr * dp * c[0][1] + dp * dp * c[1][1]).max(0.0).sqrt()
}

fn band(value: f64, se: f64) -> (f64, f64) {
    if se.is_finite() {
        ((value - Z_975 * se).max(0.0), (value + Z_975 * se).min(1.0))
    } else {
        (0.0, 1.0)
    }
}

/// Largest value shown in the pmf and cdf tables.
fn support_end(counts: &[u64]) -> u64 {
    counts.iter().copied().max().unwrap_or(0)
}

fn pmf_rows(counts: &[u64], fit: &NegBinParams) -> Vec<Vec<String>> {
    let n = counts.len() as f64;
    let hi = support_end(counts);
    let mut freq = vec![0usize; hi as usize + 1];
    for &c in counts {
        freq[c as usize] += 1;
    }
    let dist = fit.distribution();
    let pmf_at = |k: u64| move |r: f64, p: f64| NegativeBinomial { r, p }.pmf(k);
    (0..=hi)
        .map(|k| {
            let f = dist.pmf(k);
            let (lo, up) = band(f, delta_se(fit, pmf_at(k)));
            vec![
                k.to_string(),
                (freq[k as usize] as f64 / n).to_string(),
                f.to_string(),
                lo.to_string(),
                up.to_string(),
            ]
        })
        .collect()
}

fn cdf_rows(counts: &[u64], fit: &NegBinParams) -> Vec<Vec<String>> {
    let n = counts.len() as f64;
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let dist = fit.distribution();
    let cdf_at = |k: u64| move |r: f64, p: f64| NegativeBinomial { r, p }.cdf(k);
    let mut below = 0usize;
    (0..=support_end(counts))
        .map(|k| {
            while below < sorted.len() && sorted[below] <= k {
                below += 1;
            }
            let e = below as f64 / n;
            let half = Z_975 * (e * (1.0 - e) / n).sqrt();
            let f = dist.cdf(k);
            let (lo, up) = band(f, delta_se(fit, cdf_at(k)));
            vec![
                k.to_string(),
                e.to_string(),
                (e - half).max(0.0).to_string(),
                (e + half).min(1.0).to_string(),
                f.to_string(),
                lo.to_string(),
                up.to_string(),
            ]
        })
        .collect()
}

fn beta_rows(params: &BetaParams) -> Vec<Vec<String>> {
    let dist = params.distribution();
    (1..BETA_GRID)
        .map(|i| {
            let x = i as f64 / BETA_GRID as f64;
            vec![x.to_string(), dist.pdf(x).to_string(), dist.cdf(x).to_string()]
        })
        .collect()
}

fn series_table(report: &AnalysisReport) -> Vec<Vec<String>> {
    report
        .per_series
        .iter()
        .map(|s| {
            let f = s.fit.as_ref();
            let half = |ci: (f64, f64)| 0.5 * (ci.1 - ci.0);
            vec![
                s.series_id.clone(),
                format!("{:?}", s.status).to_lowercase(),
                s.n_obs.to_string(),
                opt(f.map(|f| f.r)),
                opt(f.map(|f| half(f.ci_r))),
                opt(f.map(|f| f.p)),
                opt(f.map(|f| half(f.ci_p))),
                opt(s.ks.as_ref().map(|t| t.p_value)),
                opt(s.chi2.as_ref().map(|t| t.p_value)),
                opt(s.best_p),
                s.in_pool.to_string(),
                opt(s.r_infinity),
                s.ratio_converged.map(|c| c.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

fn beta_table(report: &AnalysisReport) -> Vec<String> {
    let b = report.beta.as_ref();
    let rho = report.rho_infinity.as_ref();
    let pooled = report.pooled.as_ref();
    vec![
        report.group.to_string(),
        report.wave.to_string(),
        opt(b.map(|b| b.params.r)),
        opt(b.map(|b| b.params.ci_r.0)),
        opt(b.map(|b| b.params.ci_r.1)),
        opt(b.map(|b| b.params.theta)),
        opt(b.map(|b| b.params.ci_theta.0)),
        opt(b.map(|b| b.params.ci_theta.1)),
        opt(rho.map(|r| r.value)),
        opt(rho.map(|r| r.ci.0)),
        opt(rho.map(|r| r.ci.1)),
        opt(pooled.map(|p| p.mu_r)),
        opt(pooled.map(|p| p.ci_mu_r.0)),
        opt(pooled.map(|p| p.ci_mu_r.1)),
        opt(pooled.map(|p| p.mu_p)),
        opt(pooled.map(|p| p.ci_mu_p.0)),
        opt(pooled.map(|p| p.ci_mu_p.1)),
        opt(b.map(|b| b.ks.p_value)),
        opt(b.and_then(|b| b.chi2.as_ref()).map(|t| t.p_value)),
    ]
}

fn ratio_rows(series: &[SeriesData]) -> Vec<Vec<String>> {
    series
        .iter()
        .filter_map(|s| s.ratio.as_ref().map(|r| (s, r)))
        .flat_map(|(s, r)| {
            r.r_n.iter().enumerate().filter_map(move |(i, v)| {
                v.map(|v| vec![s.series_id.clone(), (r.onset + i).to_string(), i.to_string(), v.to_string()])
            })
        })
        .collect()
}

/// Write the report and its tables and plot data under `out_dir`, plus SVG
/// charts when `svg` is set.
pub fn write_outputs(analysis: &WaveAnalysis, out_dir: &Path, svg: bool) -> io::Result<OutputFiles> {
    let report = &analysis.report;
    let tag = format!("{}_w{}", report.group, report.wave);
    let plots = out_dir.join("plots").join(&tag);
    fs::create_dir_all(&plots)?;
    let mut files = Vec::new();

    let report_path = out_dir.join(format!("report_{tag}.json"));
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(&report_path, json + "\n")?;

    let p = out_dir.join(format!("table_series_{tag}.csv"));
    write_csv(
        &p,
        &[
            "series_id", "status", "n_obs", "r", "r_ci_half", "p", "p_ci_half", "ks_p", "chi2_p", "best_p",
            "in_pool", "r_infinity", "ratio_converged",
        ],
        series_table(report),
    )?;
    files.push(p);

    let p = out_dir.join(format!("table_beta_{tag}.csv"));
    write_csv(
        &p,
        &[
            "group", "wave", "r", "r_lo", "r_hi", "theta", "theta_lo", "theta_hi", "rho_inf", "rho_lo", "rho_hi",
            "mu_r", "mu_r_lo", "mu_r_hi", "mu_p", "mu_p_lo", "mu_p_hi", "ks_p", "chi2_p",
        ],
        [beta_table(report)],
    )?;
    files.push(p);

    let p = out_dir.join(format!("ratios_{tag}.csv"));
    write_csv(&p, &["series_id", "day", "n", "r_n"], ratio_rows(&analysis.series))?;
    files.push(p);

    for (res, data) in report.per_series.iter().zip(&analysis.series) {
        let Some(fit) = &res.fit else { continue };
        let stem = file_stem(&res.series_id);
        let pmf = pmf_rows(&data.counts, fit);
        let p = plots.join(format!("{stem}_pmf.csv"));
        write_csv(&p, &["k", "observed_frequency", "fitted_pmf", "ci_lower", "ci_upper"], pmf.clone())?;
        files.push(p);
        let p = plots.join(format!("{stem}_cdf.csv"));
        write_csv(
            &p,
            &["k", "empirical_cdf", "ecdf_lower", "ecdf_upper", "fitted_cdf", "ci_lower", "ci_upper"],
            cdf_rows(&data.counts, fit),
        )?;
        files.push(p);
        if svg {
            let num = |row: &Vec<String>, i: usize| row[i].parse::<f64>().unwrap_or(0.0);
            let bars: Vec<(f64, f64)> = pmf.iter().map(|r| (num(r, 0), num(r, 1))).collect();
            let line: Vec<(f64, f64)> = pmf.iter().map(|r| (num(r, 0), num(r, 2))).collect();
            let p = plots.join(format!("{stem}_pmf.svg"));
            fs::write(&p, render_svg(&res.series_id, &bars, &line))?;
            files.push(p);
        }
    }
    if let Some(b) = &report.beta {
        let rows = beta_rows(&b.params);
        let p = plots.join("beta.csv");
        write_csv(&p, &["x", "pdf", "cdf"], rows.clone())?;
        files.push(p);
        if svg {
            let mut bars = Vec::new();
            let values: Vec<f64> = report.per_series.iter().filter(|s| s.selected).filter_map(|s| s.r_infinity).collect();
            if !values.is_empty() {
                let bins = 20;
                let mut counts = vec![0usize; bins];
                for v in &values {
                    counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
                }
                let width = 1.0 / bins as f64;
                bars = counts
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| ((i as f64 + 0.5) * width, c as f64 / (values.len() as f64 * width)))
                    .collect();
            }
            let line: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r[0].parse().unwrap_or(0.0), r[1].parse().unwrap_or(0.0)))
                .collect();
            let p = plots.join("beta.svg");
            fs::write(&p, render_svg(&format!("Beta {tag}"), &bars, &line))?;
            files.push(p);
        }
    }
    Ok(OutputFiles {
        report: report_path,
        files,
    })
}

/// A bare-bones chart: `bars` as columns, `line` as a polyline, both in
/// data coordinates scaled to fit.
pub fn render_svg(title: &str, bars: &[(f64, f64)], line: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    let all = bars.iter().chain(line);
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() || x1 <= x0 {
        x0 = 0.0;
        x1 = 1.0;
    }
    if y1 <= 0.0 || !y1.is_finite() {
        y1 = 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y1 * (H - 2.0 * PAD);
    let bar_w = if bars.len() > 1 { ((W - 2.0 * PAD) / bars.len() as f64 * 0.8).max(1.0) } else { 4.0 };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let title = title.replace('&', "&amp;").replace('<', "&lt;");
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r##"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="#000"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{0}" stroke="#000"/>"##,
        H - PAD,
        W - PAD
    );
    for &(x, y) in bars {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1"/>"##,
            sx(x) - bar_w / 2.0,
            sy(y),
            bar_w,
            (H - PAD) - sy(y)
        );
    }
    if !line.is_empty() {
        let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}
