//! Run configuration shared by the command-line front end and library users.
//!
//! A run is fully described by [`RunConfig`]; its fingerprint is stamped on
//! every report so results can be traced to the thresholds that made them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{CleanConfig, EntityFilter, Group, Schema};
use crate::pipeline::{fingerprint, PipelineConfig};

pub const OUT_DIR_ENV: &str = "POLYA_OUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub schema: Schema,
    /// Defaults to the schema's group.
    pub group: Option<Group>,
    pub waves: Vec<u8>,
    /// Window CSV overriding segmentation for the series it lists.
    pub windows: Option<PathBuf>,
    pub clean: CleanConfig,
    pub filter: EntityFilter,
    pub pipeline: PipelineConfig,
    /// Falls back to `$POLYA_OUT_DIR`, then `polya-out`.
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            schema: Schema::National,
            group: None,
            waves: vec![1, 2],
            windows: None,
            clean: CleanConfig::default(),
            filter: EntityFilter::default(),
            pipeline: PipelineConfig::default(),
            out_dir: None,
            svg: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("polya-out"))
    }

    pub fn group(&self) -> Group {
        self.group.unwrap_or_else(|| self.schema.default_group())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.pipeline;
        for (name, a) in [("gof_alpha", p.gof_alpha), ("t_alpha", p.t_alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(ConfigError::Invalid(format!("{name} must lie in (0, 1), got {a}")));
            }
        }
        if self.waves.is_empty() || self.waves.iter().any(|w| !(1..=2).contains(w)) {
            return Err(ConfigError::Invalid(format!("waves must be drawn from {{1, 2}}, got {:?}", self.waves)));
        }
        if !(self.clean.outlier_k > 0.0) || !(p.mad_multiplier > 0.0) {
            return Err(ConfigError::Invalid("outlier multipliers must be positive".into()));
        }
        if p.segmentation.smoothing_window % 2 == 0 {
            return Err(ConfigError::Invalid("smoothing window must be odd".into()));
        }
        Ok(())
    }

    /// Hash of everything that shapes the results. The output directory is
    /// left out so the same run written to two places carries one fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut view = self.clone();
        view.out_dir = None;
        fingerprint(&view)
    }
}
