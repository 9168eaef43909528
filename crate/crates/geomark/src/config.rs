//! Engine configuration: one flat key=value file for every constant the
//! pipeline uses, so values never drift between tools. Flags override file
//! values; file values override defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geo::MeasurementConstants;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("key {key}: invalid value {value:?}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("key {key}: {reason}")]
    InvariantViolation { key: &'static str, reason: String },
}

/// Hyperparameters of the sequence tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerHyperParams {
    pub embedding_dim: usize,
    pub encoder_units: usize,
    pub decoder_units: usize,
    /// Coefficient of distinguishing for the self-adaptive tag weights.
    pub alpha_distinguish: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Global-norm gradient clip applied per batch; 0 disables clipping.
    pub grad_clip: f64,
}

impl Default for TaggerHyperParams {
    fn default() -> Self {
        Self {
            embedding_dim: 50,
            encoder_units: 256,
            decoder_units: 512,
            alpha_distinguish: 64.0,
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.05,
            grad_clip: 5.0,
        }
    }
}

/// All engine-wide constants and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub consts: MeasurementConstants,
    /// Weight of the delay score in the combined landmark score.
    pub alpha_delay: f64,
    /// Weight of the topology score in the combined landmark score.
    pub beta_topo: f64,
    /// Probes selected closest to the target during geolocation.
    pub k_probes: usize,
    /// Maximum candidate landmarks kept after delay scoring.
    pub k_candidates: usize,
    /// Candidate coordinates closer than this merge into one.
    pub merge_threshold_km: f64,
    /// Landmarks within this multiple of the smallest constraint-circle
    /// radius count as "in the vicinity" during mining-time selection.
    pub vicinity_radius_factor: f64,
    pub tagger: TaggerHyperParams,
    /// Default simulator config consumed by measurement-backed commands.
    pub sim_config: Option<PathBuf>,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            consts: MeasurementConstants::default(),
            alpha_delay: 0.5,
            beta_topo: 0.5,
            k_probes: 200,
            k_candidates: 1000,
            merge_threshold_km: 1.0,
            vicinity_radius_factor: 5.0,
            tagger: TaggerHyperParams::default(),
            sim_config: None,
            seed: 42,
        }
    }
}

impl EngineConfig {
    /// Parse a key=value config file. Missing keys keep their defaults,
    /// unknown keys are rejected, `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            cfg.apply(key, value)
                .map_err(|e| match e {
                    ConfigError::UnknownKey { .. } => ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    },
                    other => other,
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::InvalidValue {
                key: key.to_string(),
                value: value.to_string(),
                reason: "not a valid number".to_string(),
            })
        }
        match key {
            "converting_factor" => self.consts.converting_factor = num(key, value)?,
            "light_speed_km_s" => self.consts.light_speed_km_s = num(key, value)?,
            "sphere_radius_km" => self.consts.sphere_radius_km = num(key, value)?,
            "alpha_delay" => self.alpha_delay = num(key, value)?,
            "beta_topo" => self.beta_topo = num(key, value)?,
            "k_probes" => self.k_probes = num(key, value)?,
            "k_candidates" => self.k_candidates = num(key, value)?,
            "merge_threshold_km" => self.merge_threshold_km = num(key, value)?,
            "vicinity_radius_factor" => self.vicinity_radius_factor = num(key, value)?,
            "tagger.embedding_dim" => self.tagger.embedding_dim = num(key, value)?,
            "tagger.encoder_units" => self.tagger.encoder_units = num(key, value)?,
            "tagger.decoder_units" => self.tagger.decoder_units = num(key, value)?,
            "tagger.alpha_distinguish" => self.tagger.alpha_distinguish = num(key, value)?,
            "tagger.epochs" => self.tagger.epochs = num(key, value)?,
            "tagger.batch_size" => self.tagger.batch_size = num(key, value)?,
            "tagger.learning_rate" => self.tagger.learning_rate = num(key, value)?,
            "tagger.grad_clip" => self.tagger.grad_clip = num(key, value)?,
            "sim_config" => {
                self.sim_config = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "seed" => self.seed = num(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.consts
            .validate()
            .map_err(|e| ConfigError::InvariantViolation {
                key: "converting_factor",
                reason: e.to_string(),
            })?;
        for (key, v) in [
            ("alpha_delay", self.alpha_delay),
            ("beta_topo", self.beta_topo),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::InvariantViolation {
                    key: if key == "alpha_delay" {
                        "alpha_delay"
                    } else {
                        "beta_topo"
                    },
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.k_probes == 0 {
            return Err(ConfigError::InvariantViolation {
                key: "k_probes",
                reason: "must be at least 1".to_string(),
            });
        }
        if self.k_candidates == 0 {
            return Err(ConfigError::InvariantViolation {
                key: "k_candidates",
                reason: "must be at least 1".to_string(),
            });
        }
        if !self.merge_threshold_km.is_finite() || self.merge_threshold_km < 0.0 {
            return Err(ConfigError::InvariantViolation {
                key: "merge_threshold_km",
                reason: format!("must be non-negative, got {}", self.merge_threshold_km),
            });
        }
        if !self.vicinity_radius_factor.is_finite() || self.vicinity_radius_factor <= 0.0 {
            return Err(ConfigError::InvariantViolation {
                key: "vicinity_radius_factor",
                reason: "must be positive".to_string(),
            });
        }
        let t = &self.tagger;
        if t.embedding_dim == 0 || t.encoder_units == 0 || t.decoder_units == 0 {
            return Err(ConfigError::InvariantViolation {
                key: "tagger.embedding_dim",
                reason: "tagger dimensions must be positive".to_string(),
            });
        }
        if t.batch_size == 0 {
            return Err(ConfigError::InvariantViolation {
                key: "tagger.batch_size",
                reason: "must be at least 1".to_string(),
            });
        }
        if !t.learning_rate.is_finite() || t.learning_rate <= 0.0 {
            return Err(ConfigError::InvariantViolation {
                key: "tagger.learning_rate",
                reason: "must be positive".to_string(),
            });
        }
        if !t.grad_clip.is_finite() || t.grad_clip < 0.0 {
            return Err(ConfigError::InvariantViolation {
                key: "tagger.grad_clip",
                reason: "must be non-negative (0 disables)".to_string(),
            });
        }
        if !t.alpha_distinguish.is_finite() || t.alpha_distinguish < 0.0 {
            return Err(ConfigError::InvariantViolation {
                key: "tagger.alpha_distinguish",
                reason: "must be non-negative".to_string(),
            });
        }
        Ok(())
    }

    /// Canonical key=value dump; `load(dump(cfg))` reproduces `cfg`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("converting_factor", self.consts.converting_factor.to_string());
        kv("light_speed_km_s", self.consts.light_speed_km_s.to_string());
        kv("sphere_radius_km", self.consts.sphere_radius_km.to_string());
        kv("alpha_delay", self.alpha_delay.to_string());
        kv("beta_topo", self.beta_topo.to_string());
        kv("k_probes", self.k_probes.to_string());
        kv("k_candidates", self.k_candidates.to_string());
        kv("merge_threshold_km", self.merge_threshold_km.to_string());
        kv(
            "vicinity_radius_factor",
            self.vicinity_radius_factor.to_string(),
        );
        kv("tagger.embedding_dim", self.tagger.embedding_dim.to_string());
        kv("tagger.encoder_units", self.tagger.encoder_units.to_string());
        kv("tagger.decoder_units", self.tagger.decoder_units.to_string());
        kv(
            "tagger.alpha_distinguish",
            self.tagger.alpha_distinguish.to_string(),
        );
        kv("tagger.epochs", self.tagger.epochs.to_string());
        kv("tagger.batch_size", self.tagger.batch_size.to_string());
        kv("tagger.learning_rate", self.tagger.learning_rate.to_string());
        kv("tagger.grad_clip", self.tagger.grad_clip.to_string());
        if let Some(p) = &self.sim_config {
            kv("sim_config", p.display().to_string());
        }
        kv("seed", self.seed.to_string());
        out
    }
}
