//! Synthetic multi-entity fixtures with known generating parameters.
//!
//! Each entity owns an urn with the configured composition and a horizon
//! `n_i` drawn uniformly from `steps_range`. Daily confirmed counts are drawn
//! i.i.d. from the entity's count law and arranged into unimodal waves, so a
//! wave's marginal distribution is exactly the generating law. Daily tests are
//! `round(c_t / Z_i)` where `Z_i` is the terminal white-draw share of a
//! separate urn run, making the cumulative positive ratio converge to `Z_i`.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::NegativeBinomial;
use crate::ingestion::{Schema, SeriesRecord};
use crate::rng::{self, SimRng};
use crate::segmentation::WaveWindow;
use crate::urn::{self, UrnConfig, UrnError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Urn(#[from] UrnError),
    #[error("invalid fixture configuration: {0}")]
    Invalid(String),
    #[error("failed to write fixture: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to write fixture: {0}")]
    Csv(#[from] csv::Error),
}

/// Where daily counts come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountModel {
    /// `NB(w/d, N/(N + n_i d))`, the urn's limit law at the entity horizon.
    LimitLaw,
    /// White draws of a fresh `n_i`-step urn run per day.
    ExactUrn,
    /// A fixed negative binomial shared by every entity.
    NegBin { r: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    pub entities: usize,
    pub days: usize,
    /// Waves per entity, 1 or 2. Each wave spans `days / waves` days.
    pub waves: usize,
    pub schema: Schema,
    pub start: NaiveDate,
    pub total: u64,
    pub white: u64,
    pub reinforcement: u64,
    /// Inclusive range of per-entity urn horizons.
    pub steps_range: (u64, u64),
    /// Steps of the urn run that sets each entity's positive ratio.
    pub ratio_steps: u64,
    pub counts: CountModel,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            entities: 30,
            days: 120,
            waves: 2,
            schema: Schema::National,
            start: NaiveDate::from_ymd_opt(2020, 3, 1).expect("valid date"),
            total: 10_000,
            white: 500,
            reinforcement: 200,
            steps_range: (500, 2000),
            ratio_steps: 20_000,
            counts: CountModel::LimitLaw,
            seed: 0,
        }
    }
}

impl FixtureConfig {
    pub fn urn(&self) -> UrnConfig {
        UrnConfig::new(self.total, self.white, self.reinforcement)
    }

    fn validate(&self) -> Result<(), FixtureError> {
        self.urn().validate()?;
        if self.entities == 0 || self.days == 0 {
            return Err(FixtureError::Invalid("need at least one entity and one day".into()));
        }
        if !(1..=2).contains(&self.waves) {
            return Err(FixtureError::Invalid(format!("waves must be 1 or 2, got {}", self.waves)));
        }
        if self.days / self.waves < 3 {
            return Err(FixtureError::Invalid("each wave needs at least 3 days".into()));
        }
        let (lo, hi) = self.steps_range;
        if lo == 0 || lo > hi {
            return Err(FixtureError::Invalid(format!("bad steps range {lo}..={hi}")));
        }
        if self.ratio_steps == 0 {
            return Err(FixtureError::Invalid("ratio_steps must be positive".into()));
        }
        if let CountModel::NegBin { r, p } = self.counts {
            NegativeBinomial::new(r, p).map_err(|e| FixtureError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Entity name `i` (zero-based), zero padded so names sort numerically.
    pub fn entity_name(&self, i: usize) -> String {
        let width = self.entities.to_string().len().max(2);
        let prefix = match self.schema {
            Schema::National => "Country",
            Schema::Regional => "Region",
        };
        format!("{prefix}{:0width$}", i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTruth {
    pub series_id: String,
    pub steps: u64,
    /// Parameters of the law the counts were drawn from. For the exact urn
    /// these are the limit-law values it approximates.
    pub nb_r: f64,
    pub nb_p: f64,
    /// Terminal share of white draws that sets the positive ratio.
    pub z: f64,
    pub windows: Vec<WaveWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub config: FixtureConfig,
    pub rho0: f64,
    pub beta_r: f64,
    pub beta_theta: f64,
    pub entities: Vec<EntityTruth>,
}

impl FixtureTruth {
    /// Generating windows of wave `wave` keyed by series id.
    pub fn windows(&self, wave: u8) -> std::collections::BTreeMap<String, WaveWindow> {
        self.entities
            .iter()
            .filter_map(|e| e.windows.get(wave as usize - 1).map(|w| (e.series_id.clone(), *w)))
            .collect()
    }
}

pub struct Fixture {
    pub records: Vec<SeriesRecord>,
    pub truth: FixtureTruth,
}

/// Place values so they rise to a single peak at `peak` and fall after it.
fn unimodal(mut values: Vec<u64>, peak: usize) -> Vec<u64> {
    let len = values.len();
    values.sort_unstable_by(|a, b| b.cmp(a));
    let mut out = vec![0; len];
    let (mut left, mut right) = (peak as isize - 1, peak + 1);
    let mut it = values.into_iter();
    out[peak] = it.next().unwrap_or(0);
    let mut go_left = true;
    for v in it {
        let use_left = left >= 0 && (go_left || right >= len);
        if use_left {
            out[left as usize] = v;
            left -= 1;
        } else {
            out[right] = v;
            right += 1;
        }
        go_left = !go_left;
    }
    out
}

fn white_draws(urn: &UrnConfig, steps: u64, rng: &mut SimRng) -> u64 {
    urn::run_terminal(&urn.with_steps(steps), rng).white_draws
}

fn generate_entity(config: &FixtureConfig, i: usize) -> Result<(SeriesRecord, EntityTruth), FixtureError> {
    let base = config.urn();
    let mut rng = rng::stream(config.seed, i as u64);
    let (lo, hi) = config.steps_range;
    let steps = rng.random_range(lo..=hi);
    let law = urn::limit_params(&base, steps)?;
    let (nb_r, nb_p) = match config.counts {
        CountModel::NegBin { r, p } => (r, p),
        _ => (law.r, law.p),
    };
    let nb = NegativeBinomial::new(nb_r, nb_p).map_err(|e| FixtureError::Invalid(e.to_string()))?;
    let z = (urn::run_terminal(&base.with_steps(config.ratio_steps), &mut rng).z).max(1.0 / config.ratio_steps as f64);

    let span = config.days / config.waves;
    let mut confirmed = vec![0u64; config.days];
    let mut windows = Vec::with_capacity(config.waves);
    for w in 0..config.waves {
        let onset = w * span;
        let close = if w + 1 == config.waves { config.days - 1 } else { onset + span - 1 };
        let len = close - onset + 1;
        let draws: Vec<u64> = match config.counts {
            CountModel::ExactUrn => (0..len).map(|_| white_draws(&base, steps, &mut rng)).collect(),
            _ => nb.sample(len, &mut rng),
        };
        let peak = len / 2;
        let shaped = unimodal(draws, peak);
        confirmed[onset..=close].copy_from_slice(&shaped);
        windows.push(WaveWindow {
            wave_index: w as u8 + 1,
            onset,
            peak: onset + peak,
            close,
            peak_height: shaped[peak] as f64,
            overlap: false,
        });
    }
    let tests: Vec<f64> = confirmed.iter().map(|&c| (c as f64 / z).round()).collect();
    let id = config.entity_name(i);
    let group = config.schema.default_group();
    let record = SeriesRecord::daily(
        &id,
        group,
        config.start,
        confirmed.iter().map(|&c| c as f64).collect(),
        tests,
    );
    let truth = EntityTruth {
        series_id: id,
        steps,
        nb_r,
        nb_p,
        z,
        windows,
    };
    Ok((record, truth))
}

/// Generate every entity; entity `i` uses random stream `(seed, i)`.
pub fn generate(config: &FixtureConfig) -> Result<Fixture, FixtureError> {
    config.validate()?;
    let parts: Vec<_> = (0..config.entities)
        .into_par_iter()
        .map(|i| generate_entity(config, i))
        .collect::<Result<_, _>>()?;
    let law = urn::limit_params(&config.urn(), 1)?;
    let (records, entities) = parts.into_iter().unzip();
    Ok(Fixture {
        records,
        truth: FixtureTruth {
            config: config.clone(),
            rho0: law.rho0,
            beta_r: law.r,
            beta_theta: law.theta,
            entities,
        },
    })
}

/// Write records in the schema's CSV layout, sorted by entity then date.
pub fn write_csv<W: Write>(records: &[SeriesRecord], schema: Schema, writer: W) -> Result<(), FixtureError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(schema.header().split(','))?;
    let mut sorted: Vec<&SeriesRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.series_id.cmp(&b.series_id));
    for r in sorted {
        for t in 0..r.len() {
            out.write_record([
                r.dates[t].to_string(),
                r.series_id.clone(),
                format!("{}", r.confirmed[t]),
                format!("{}", r.tests[t]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Sidecar path holding the generating truth for a fixture CSV.
pub fn truth_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("truth.json")
}

/// Write the fixture CSV and its truth sidecar; returns both paths.
pub fn write_fixture(fixture: &Fixture, csv_path: &Path) -> Result<(PathBuf, PathBuf), FixtureError> {
    if let Some(dir) = csv_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(csv_path)?;
    write_csv(&fixture.records, fixture.truth.config.schema, std::io::BufWriter::new(file))?;
    let truth = truth_path(csv_path);
    let json = serde_json::to_string_pretty(&fixture.truth).map_err(std::io::Error::other)?;
    std::fs::write(&truth, json + "\n")?;
    Ok((csv_path.to_path_buf(), truth))
}

pub fn read_truth(path: &Path) -> Result<FixtureTruth, FixtureError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| FixtureError::Io(std::io::Error::other(e)))
}
