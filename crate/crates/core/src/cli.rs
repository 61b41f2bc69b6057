//! Command-line front end: `simulate`, `analyze`, `segment`, `gen-fixture`
//! and `report`.
//!
//! Exit codes: 0 success, 1 analysis or runtime failure, 2 usage or schema
//! error. Summaries go to the supplied writer (standard output for the
//! binary); every file goes under the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig, OUT_DIR_ENV};
use crate::distributions::{beta_fit_mle, BetaDist, BetaParams, NegativeBinomial};
use crate::fixture::{self, CountModel, FixtureConfig};
use crate::ingestion::{
    clean_all, load_csv, to_daily, write_audit_log, Group, IngestError, RowDiagnostic, Schema, SeriesRecord,
};
use crate::pipeline::{self, analyze_wave_with_windows, write_outputs, AnalysisReport, NamedTest};
use crate::segmentation::{detect_waves, read_windows_csv, write_windows_csv, SegmentError, WaveWindow, WindowRow};
use crate::stats_tests::{ks_test, ks_test_discrete, TestResult, TwoSampleVariance};
use crate::urn::{self, LimitLawParams, UrnConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polya", version, about = "Polya urn analysis of epidemic waves")]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an urn and compare it with its limit laws.
    Simulate(SimulateArgs),
    /// Fit, select and pool the waves of case and test series.
    Analyze(AnalyzeArgs),
    /// Detect wave windows and write them as CSV.
    Segment(SegmentArgs),
    /// Generate a synthetic dataset with known parameters.
    GenFixture(GenFixtureArgs),
    /// Summarize one report or compare two.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Initial number of balls N.
    #[arg(long)]
    pub n_total: u64,
    /// Initial white balls w.
    #[arg(long)]
    pub white: u64,
    /// Balls added per drawn ball.
    #[arg(long)]
    pub d: u64,
    /// Balls drawn per step.
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs whose end states are compared with the limit laws.
    #[arg(long, default_value_t = 0)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveChoice {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl WaveChoice {
    fn waves(self) -> Vec<u8> {
        match self {
            WaveChoice::One => vec![1],
            WaveChoice::Two => vec![2],
            WaveChoice::Both => vec![1, 2],
        }
    }
}

/// Input and threshold flags shared by `analyze` and `segment`. Every flag
/// overrides the matching entry of `--config`.
#[derive(Debug, Args, Default)]
pub struct InputArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV (repeatable).
    #[arg(long = "input", short)]
    pub inputs: Vec<PathBuf>,
    /// Column layout: national or regional.
    #[arg(long)]
    pub schema: Option<Schema>,
    /// Group label (E or I); defaults to the schema's group.
    #[arg(long)]
    pub group: Option<Group>,
    /// Drop an entity by name (repeatable).
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Drop entities without any test data.
    #[arg(long)]
    pub require_tests: bool,
    /// Daily values above Q3 + k IQR are removed.
    #[arg(long)]
    pub outlier_k: Option<f64>,
    /// Keep outlying daily values.
    #[arg(long)]
    pub keep_outliers: bool,
    #[arg(long)]
    pub smoothing_window: Option<usize>,
    /// Minimum peak prominence as a fraction of the series maximum.
    #[arg(long)]
    pub prominence: Option<f64>,
    #[arg(long)]
    pub min_wave_len: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub wave: Option<WaveChoice>,
    /// Window CSV overriding segmentation for the series it lists.
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// Level of the KS and chi-square selection tests.
    #[arg(long)]
    pub gof_alpha: Option<f64>,
    #[arg(long)]
    pub t_alpha: Option<f64>,
    /// Pooled outliers lie more than k MADs from the median r.
    #[arg(long)]
    pub mad_k: Option<f64>,
    /// Days the positive ratio must stay within tolerance to count as converged.
    #[arg(long)]
    pub convergence_days: Option<usize>,
    #[arg(long)]
    pub convergence_eps: Option<f64>,
    /// Parametric-bootstrap KS replicates per series.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the pooled-variance two-sample t-test instead of Welch.
    #[arg(long)]
    pub pooled_variance: bool,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args, Default)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountKind {
    /// Limit-law negative binomial at each entity's horizon.
    Limit,
    /// Exact urn white-draw counts.
    Exact,
    /// Fixed NB(--nb-r, --nb-p).
    Negbin,
}

#[derive(Debug, Args)]
pub struct GenFixtureArgs {
    #[arg(long, default_value_t = 30)]
    pub entities: usize,
    #[arg(long, default_value_t = 120)]
    pub days: usize,
    #[arg(long, default_value_t = 2)]
    pub waves: usize,
    #[arg(long, default_value = "national")]
    pub schema: Schema,
    #[arg(long, default_value = "2020-03-01")]
    pub start: NaiveDate,
    #[arg(long, default_value_t = 10_000)]
    pub n_total: u64,
    #[arg(long, default_value_t = 500)]
    pub white: u64,
    #[arg(long, default_value_t = 200)]
    pub d: u64,
    #[arg(long, default_value_t = 500)]
    pub steps_min: u64,
    #[arg(long, default_value_t = 2000)]
    pub steps_max: u64,
    #[arg(long, default_value_t = 20_000)]
    pub ratio_steps: u64,
    #[arg(long, value_enum, default_value_t = CountKind::Limit)]
    pub counts: CountKind,
    #[arg(long, default_value_t = 1.48)]
    pub nb_r: f64,
    #[arg(long, default_value_t = 0.0317)]
    pub nb_p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File stem of the written CSV and sidecars.
    #[arg(long, default_value = "fixture")]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One report to summarize, or two to compare.
    #[arg(num_args = 1..=2, required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub pooled_variance: bool,
    /// Write the comparison JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Analysis(_) | Failure::Runtime(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Analysis(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } | IngestError::Fetch(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn finish(result: Result<i32, Failure>) -> i32 {
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn default_out(flag: Option<&PathBuf>) -> PathBuf {
    flag.cloned()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("polya-out"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, json + "\n")
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}

/// Run a parsed command line. Output is collected while the command runs on
/// its thread pool and then copied to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> i32 {
    let mut buf = Vec::new();
    let code = with_threads(cli.threads, || match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &mut buf),
        Command::Analyze(a) => cmd_analyze(a, &mut buf),
        Command::Segment(a) => cmd_segment(a, &mut buf),
        Command::GenFixture(a) => cmd_gen_fixture(a, &mut buf),
        Command::Report(a) => cmd_report(a, &mut buf),
    });
    if let Err(e) = stdout.write_all(&buf).and_then(|_| stdout.flush()) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    code
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Serialize)]
struct ReplicateSummary {
    replicates: usize,
    z_mean: f64,
    z_se: f64,
    z_mean_within_3se: bool,
    beta_fit: Option<BetaParams>,
    ks_z_vs_beta: Option<TestResult>,
    ks_draws_vs_nb: Option<TestResult>,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    config: UrnConfig,
    limit: Option<LimitLawParams>,
    final_z: Option<f64>,
    final_rho: Option<f64>,
    white_draws: u64,
    max_identity_gap: Option<f64>,
    replicates: Option<ReplicateSummary>,
}

fn replicate_summary(config: &UrnConfig, replicates: usize, alpha: f64) -> Result<ReplicateSummary, Failure> {
    let ends = urn::replicate_terminals(config, replicates).map_err(|e| Failure::Usage(e.to_string()))?;
    let zs: Vec<f64> = ends.iter().map(|t| t.z).collect();
    let n = zs.len() as f64;
    let z_mean = zs.iter().sum::<f64>() / n;
    let var = zs.iter().map(|z| (z - z_mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let z_se = (var / n).sqrt();
    let limit = urn::limit_params(config, config.steps * config.draws_per_step).ok();
    let interior: Vec<f64> = zs.iter().copied().filter(|&z| z > 0.0 && z < 1.0).collect();
    let ks_z_vs_beta = limit
        .and_then(|l| BetaDist::new(l.r, l.theta).ok())
        .and_then(|b| ks_test(&zs, |x| b.cdf(x), alpha).ok());
    let ks_draws_vs_nb = limit.and_then(|l| NegativeBinomial::new(l.r, l.p).ok()).and_then(|nb| {
        let draws: Vec<u64> = ends.iter().map(|t| t.white_draws).collect();
        ks_test_discrete(&draws, |k| nb.cdf(k), alpha).ok()
    });
    Ok(ReplicateSummary {
        replicates,
        z_mean,
        z_se,
        z_mean_within_3se: (z_mean - config.rho0()).abs() <= 3.0 * z_se,
        beta_fit: beta_fit_mle(&interior).ok(),
        ks_z_vs_beta,
        ks_draws_vs_nb,
    })
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> i32 {
    finish(simulate_inner(args, stdout))
}

fn simulate_inner(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let config = UrnConfig::new(args.n_total, args.white, args.d)
        .with_draws_per_step(args.m)
        .with_steps(args.steps)
        .with_seed(args.seed);
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Usage(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let out = default_out(args.out.as_ref());
    fs::create_dir_all(&out)?;
    let traj = urn::simulate(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
    let file = fs::File::create(out.join("trajectory.csv"))?;
    traj.write_csv(io::BufWriter::new(file)).map_err(|e| Failure::Runtime(e.to_string()))?;

    let limit = urn::limit_params(&config, args.steps * args.m).ok();
    let replicates = if args.replicates > 1 {
        Some(replicate_summary(&config, args.replicates, args.alpha)?)
    } else {
        None
    };
    let summary = SimulateSummary {
        config,
        limit,
        final_z: traj.z_series.last().copied(),
        final_rho: traj.rho_series.last().copied(),
        white_draws: traj.white_draw_total(),
        max_identity_gap: traj.max_identity_gap().filter(|_| !traj.is_empty()),
        replicates,
    };
    write_json(&out.join("simulate_summary.json"), &summary)?;

    let d = args.d as f64;
    write!(
        stdout,
        "r={} \u{3b8}={} rho0={} steps={}",
        args.white as f64 / d,
        (args.n_total - args.white) as f64 / d,
        config.rho0(),
        args.steps
    )?;
    match &summary.limit {
        Some(l) => writeln!(stdout, " p={:.6}", l.p)?,
        None => writeln!(stdout)?,
    }
    if let (Some(z), Some(rho)) = (summary.final_z, summary.final_rho) {
        writeln!(stdout, "Z_n={z:.6} rho_n={rho:.6} white_draws={}", summary.white_draws)?;
    }
    if let Some(rep) = &summary.replicates {
        let within = if rep.z_mean_within_3se { "within" } else { "outside" };
        writeln!(
            stdout,
            "replicates={} mean_Z={:.5} se={:.5} ({within} 3 SE of rho0)",
            rep.replicates, rep.z_mean, rep.z_se
        )?;
        if let Some(b) = &rep.beta_fit {
            writeln!(stdout, "beta fit r={:.3} \u{3b8}={:.3} mean={:.5}", b.r, b.theta, b.mean())?;
        }
        for (name, t) in [("Z vs Beta", &rep.ks_z_vs_beta), ("draws vs NB", &rep.ks_draws_vs_nb)] {
            if let Some(t) = t {
                writeln!(stdout, "KS {name}: D={:.5} p={:.4}", t.statistic, t.p_value)?;
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- analyze

/// Fold explicit flags over the file configuration.
fn apply_input_flags(cfg: &mut RunConfig, a: &InputArgs) {
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs.clone();
    }
    if let Some(s) = a.schema {
        cfg.schema = s;
    }
    if a.group.is_some() {
        cfg.group = a.group;
    }
    for name in &a.exclude {
        if !cfg.filter.exclude.contains(name) {
            cfg.filter.exclude.push(name.clone());
        }
    }
    if a.require_tests {
        cfg.filter.require_tests = true;
    }
    if let Some(k) = a.outlier_k {
        cfg.clean.outlier_k = k;
    }
    if a.keep_outliers {
        cfg.clean.remove_outliers = false;
    }
    let seg = &mut cfg.pipeline.segmentation;
    if let Some(w) = a.smoothing_window {
        seg.smoothing_window = w;
    }
    if let Some(p) = a.prominence {
        seg.prominence_fraction = p;
    }
    if let Some(l) = a.min_wave_len {
        seg.min_wave_len = l;
    }
    if a.out.is_some() {
        cfg.out_dir = a.out.clone();
    }
}

fn base_config(a: &InputArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_input_flags(&mut cfg, a);
    Ok(cfg)
}

/// The complete configuration an `analyze` invocation runs with.
pub fn resolve_analyze_config(args: &AnalyzeArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &args.input.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_input_flags(&mut cfg, &args.input);
    if let Some(w) = args.wave {
        cfg.waves = w.waves();
    }
    if args.windows.is_some() {
        cfg.windows = args.windows.clone();
    }
    let p = &mut cfg.pipeline;
    if let Some(x) = args.gof_alpha {
        p.gof_alpha = x;
    }
    if let Some(x) = args.t_alpha {
        p.t_alpha = x;
    }
    if let Some(x) = args.mad_k {
        p.mad_multiplier = x;
    }
    if let Some(x) = args.convergence_days {
        p.convergence.days = x;
    }
    if let Some(x) = args.convergence_eps {
        p.convergence.tolerance = x;
    }
    if let Some(x) = args.bootstrap {
        p.bootstrap_replicates = x;
    }
    if let Some(x) = args.seed {
        p.seed = x;
    }
    if args.pooled_variance {
        p.two_sample = TwoSampleVariance::Pooled;
    }
    if args.svg {
        cfg.svg = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Default, Serialize)]
struct IngestLog {
    rejected_rows: BTreeMap<String, Vec<RowDiagnostic>>,
    dropped_entities: Vec<(String, String)>,
    warnings: BTreeMap<String, Vec<String>>,
}

/// Load, filter, convert to daily and clean every input. The audit trail
/// and ingest diagnostics are written under `out`.
fn prepare_records(cfg: &RunConfig, out: &Path) -> Result<Vec<SeriesRecord>, Failure> {
    if cfg.inputs.is_empty() {
        return Err(Failure::Usage("no input files given (use --input or `inputs` in the config)".into()));
    }
    let group = cfg.group();
    let mut log_out = IngestLog::default();
    let mut records: Vec<SeriesRecord> = Vec::new();
    for path in &cfg.inputs {
        let loaded = load_csv(path, cfg.schema)?;
        log::info!("{}: {} series, {} rejected rows", path.display(), loaded.records.len(), loaded.rejected.len());
        if !loaded.rejected.is_empty() {
            eprintln!("warning: {} rows rejected in {}", loaded.rejected.len(), path.display());
            log_out.rejected_rows.insert(path.display().to_string(), loaded.rejected);
        }
        records.extend(loaded.records);
    }
    records.sort_by(|a, b| a.series_id.cmp(&b.series_id));
    if records.windows(2).any(|w| w[0].series_id == w[1].series_id) {
        return Err(Failure::Usage("the same entity appears in more than one input".into()));
    }
    let (kept, dropped) = cfg.filter.apply(records);
    log_out.dropped_entities = dropped;
    let mut daily = Vec::with_capacity(kept.len());
    for mut r in kept {
        r.group = group;
        if !r.warnings.is_empty() {
            log_out
                .warnings
                .insert(r.series_id.clone(), r.warnings.iter().map(|w| format!("{w:?}")).collect());
        }
        daily.push(to_daily(&r)?);
    }
    let (cleaned, audit) = clean_all(&daily, &cfg.clean);
    fs::create_dir_all(out)?;
    write_audit_log(out.join("audit.json"), &audit)?;
    write_json(&out.join("ingest.json"), &log_out)?;
    Ok(cleaned)
}

/// Windows from a window CSV, per wave and series.
fn load_windows(path: &Path, records: &[SeriesRecord]) -> Result<[BTreeMap<String, WaveWindow>; 2], Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let rows = read_windows_csv(file).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let by_id: BTreeMap<&str, &SeriesRecord> = records.iter().map(|r| (r.series_id.as_str(), r)).collect();
    let mut out = [BTreeMap::new(), BTreeMap::new()];
    for row in rows {
        let Some(rec) = by_id.get(row.series_id.as_str()) else {
            log::warn!("window for unknown series {}", row.series_id);
            continue;
        };
        if !(1..=2).contains(&row.wave_index) {
            return Err(Failure::Usage(format!("wave index {} for {}", row.wave_index, row.series_id)));
        }
        let w = row
            .to_window(&rec.dates, &rec.confirmed)
            .ok_or_else(|| Failure::Usage(format!("window for {} does not fit its dates", row.series_id)))?;
        out[row.wave_index as usize - 1].insert(row.series_id.clone(), w);
    }
    Ok(out)
}

fn print_tests(stdout: &mut dyn Write, tests: &[NamedTest]) -> io::Result<()> {
    for t in tests {
        writeln!(
            stdout,
            "  {}: t={:.3} p={:.4}{}",
            t.name,
            t.result.statistic,
            t.result.p_value,
            if t.result.reject_null { " (reject)" } else { "" }
        )?;
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> i32 {
    finish(analyze_inner(args, stdout))
}

fn analyze_inner(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = resolve_analyze_config(args)?;
    let out = cfg.resolved_out_dir();
    let records = prepare_records(&cfg, &out)?;
    let windows = match &cfg.windows {
        Some(path) => load_windows(path, &records)?,
        None => Default::default(),
    };
    let group = cfg.group();
    let fp = cfg.fingerprint();
    let mut failed = false;
    let mut reports: Vec<AnalysisReport> = Vec::new();
    for &wave in &cfg.waves {
        let mut analysis =
            match analyze_wave_with_windows(&records, &windows[wave as usize - 1], group, wave, &cfg.pipeline) {
                Ok(a) => a,
                Err(e) => return Err(Failure::Analysis(e.to_string())),
            };
        analysis.report.config_fingerprint = fp.clone();
        write_outputs(&analysis, &out, cfg.svg)?;
        let report = analysis.report;
        writeln!(stdout, "{}", report.summary_line())?;
        let single = report
            .per_series
            .iter()
            .filter(|s| s.error.as_deref().is_some_and(|e| e.starts_with("only one wave")))
            .count();
        if single > 0 {
            eprintln!("wave {wave}: {single} series show a single wave");
        }
        for issue in &report.issues {
            eprintln!("wave {wave}: {issue:?}");
            failed = true;
        }
        reports.push(report);
    }
    if let [a, b] = reports.as_slice() {
        let alpha = cfg.pipeline.t_alpha;
        if let Ok(tests) = pipeline::compare(a, b, alpha, cfg.pipeline.two_sample) {
            write_json(&out.join(format!("compare_{group}.json")), &tests)?;
            print_tests(stdout, &tests)?;
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

// ---------------------------------------------------------------- segment

pub fn cmd_segment(args: &SegmentArgs, stdout: &mut dyn Write) -> i32 {
    finish(segment_inner(args, stdout))
}

fn segment_inner(args: &SegmentArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = base_config(&args.input)?;
    cfg.validate()?;
    let out = cfg.resolved_out_dir();
    let records = prepare_records(&cfg, &out)?;
    let mut rows = Vec::new();
    let (mut two, mut one, mut none) = (0, 0, 0);
    for rec in &records {
        match detect_waves(&rec.confirmed, &cfg.pipeline.segmentation) {
            Ok(ws) => {
                two += 1;
                rows.extend(ws.iter().map(|w| WindowRow::new(&rec.series_id, &rec.dates, w)));
            }
            Err(SegmentError::SingleWave(w)) => {
                one += 1;
                rows.push(WindowRow::new(&rec.series_id, &rec.dates, &w));
            }
            Err(e) => {
                none += 1;
                eprintln!("{}: {e}", rec.series_id);
            }
        }
    }
    let path = out.join("windows.csv");
    let file = fs::File::create(&path)?;
    write_windows_csv(io::BufWriter::new(file), &rows).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(
        stdout,
        "segmented {} series: {two} with two waves, {one} with one, {none} without a wave",
        records.len()
    )?;
    Ok(if two + one == 0 { EXIT_FAILURE } else { EXIT_OK })
}

// ---------------------------------------------------------------- gen-fixture

pub fn cmd_gen_fixture(args: &GenFixtureArgs, stdout: &mut dyn Write) -> i32 {
    finish(gen_fixture_inner(args, stdout))
}

fn gen_fixture_inner(args: &GenFixtureArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let config = FixtureConfig {
        entities: args.entities,
        days: args.days,
        waves: args.waves,
        schema: args.schema,
        start: args.start,
        total: args.n_total,
        white: args.white,
        reinforcement: args.d,
        steps_range: (args.steps_min, args.steps_max),
        ratio_steps: args.ratio_steps,
        counts: match args.counts {
            CountKind::Limit => CountModel::LimitLaw,
            CountKind::Exact => CountModel::ExactUrn,
            CountKind::Negbin => CountModel::NegBin {
                r: args.nb_r,
                p: args.nb_p,
            },
        },
        seed: args.seed,
    };
    let fx = fixture::generate(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = default_out(args.out.as_ref());
    let csv_path = out.join(format!("{}.csv", args.name));
    let (csv_path, truth_path) = fixture::write_fixture(&fx, &csv_path).map_err(|e| Failure::Runtime(e.to_string()))?;
    let rows: Vec<WindowRow> = fx
        .records
        .iter()
        .zip(&fx.truth.entities)
        .flat_map(|(r, t)| t.windows.iter().map(|w| WindowRow::new(&r.series_id, &r.dates, w)).collect::<Vec<_>>())
        .collect();
    let windows_path = out.join(format!("{}.windows.csv", args.name));
    write_windows_csv(io::BufWriter::new(fs::File::create(&windows_path)?), &rows)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(
        stdout,
        "{} entities x {} days -> {} (truth {}, windows {}); r={} \u{3b8}={} rho0={}",
        config.entities,
        config.days,
        csv_path.display(),
        truth_path.display(),
        windows_path.display(),
        fx.truth.beta_r,
        fx.truth.beta_theta,
        fx.truth.rho0
    )?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- report

pub fn cmd_report(args: &ReportArgs, stdout: &mut dyn Write) -> i32 {
    finish(report_inner(args, stdout))
}

fn read_report(path: &Path) -> Result<AnalysisReport, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report: AnalysisReport =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if report.schema_version != pipeline::SCHEMA_VERSION {
        return Err(Failure::Usage(format!(
            "{}: report schema {} (expected {})",
            path.display(),
            report.schema_version,
            pipeline::SCHEMA_VERSION
        )));
    }
    Ok(report)
}

fn describe(report: &AnalysisReport, stdout: &mut dyn Write) -> io::Result<()> {
    writeln!(stdout, "{}", report.summary_line())?;
    if let Some(p) = &report.pooled {
        writeln!(
            stdout,
            "  mu_r={:.3} ({:.3}-{:.3}) mu_p={:.5} ({:.5}-{:.5}) pooled={}",
            p.mu_r, p.ci_mu_r.0, p.ci_mu_r.1, p.mu_p, p.ci_mu_p.0, p.ci_mu_p.1, p.n
        )?;
        if !p.excluded_outlier_ids.is_empty() {
            writeln!(stdout, "  pooled outliers: {}", p.excluded_outlier_ids.join(", "))?;
        }
    }
    if let Some(b) = &report.beta {
        writeln!(
            stdout,
            "  beta r={:.3} ({:.3}-{:.3}) \u{3b8}={:.3} ({:.3}-{:.3}) KS p={:.4}",
            b.params.r, b.params.ci_r.0, b.params.ci_r.1, b.params.theta, b.params.ci_theta.0, b.params.ci_theta.1, b.ks.p_value
        )?;
    }
    for issue in &report.issues {
        writeln!(stdout, "  issue: {issue:?}")?;
    }
    for note in &report.notes {
        writeln!(stdout, "  note: {note}")?;
    }
    Ok(())
}

fn report_inner(args: &ReportArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let reports: Vec<AnalysisReport> = args.reports.iter().map(|p| read_report(p)).collect::<Result<_, _>>()?;
    for r in &reports {
        describe(r, stdout)?;
    }
    if let [a, b] = reports.as_slice() {
        let variance = if args.pooled_variance {
            TwoSampleVariance::Pooled
        } else {
            TwoSampleVariance::Welch
        };
        let tests = pipeline::compare(a, b, args.alpha, variance).map_err(|e| Failure::Analysis(e.to_string()))?;
        print_tests(stdout, &tests)?;
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            let name = format!("compare_{}{}_vs_{}{}.json", a.group, a.wave, b.group, b.wave);
            write_json(&dir.join(name), &tests)?;
        }
    }
    Ok(EXIT_OK)
}
