use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spoofguard::imaging::{GridSpec, DEFAULT_BINS, DEFAULT_HALF_RANGE};
use spoofguard::iq::IqFileFormat;
use spoofguard::sparse_ae::TrainConfig;

/// Every tunable a command may read, after defaults, the config file and
/// flags have been merged (in that order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub chunk_size: usize,
    pub grid: usize,
    pub half_range: f64,
    pub latent: usize,
    pub epochs: usize,
    pub sparsity_weight: f64,
    pub sparsity_target: f64,
    pub l2_weight: f64,
    pub seed: u64,
    pub format: String,
    pub sigma: f64,
    pub chunks: usize,
    pub k: usize,
    pub holdout: f64,
    pub timing_reps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            chunk_size: 1000,
            grid: DEFAULT_BINS,
            half_range: DEFAULT_HALF_RANGE,
            latent: t.latent,
            epochs: t.epochs,
            sparsity_weight: t.sparsity_weight,
            sparsity_target: t.sparsity_target,
            l2_weight: t.l2_weight,
            seed: t.seed,
            format: "cf32le".into(),
            sigma: 0.05,
            chunks: 500,
            k: 5,
            holdout: 0.2,
            timing_reps: spoofguard::evalkit::DEFAULT_TIMING_REPS,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value {value:?} for {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "chunk_size" => self.chunk_size = parse(key, value)?,
            "grid" => self.grid = parse(key, value)?,
            "half_range" => self.half_range = parse(key, value)?,
            "latent" => self.latent = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "sparsity_weight" => self.sparsity_weight = parse(key, value)?,
            "sparsity_target" => self.sparsity_target = parse(key, value)?,
            "l2_weight" => self.l2_weight = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "format" => self.format = value.to_string(),
            "sigma" => self.sigma = parse(key, value)?,
            "chunks" => self.chunks = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "holdout" => self.holdout = parse(key, value)?,
            "timing_reps" => self.timing_reps = parse(key, value)?,
            _ => return Err(ConfigError(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| ConfigError(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.chunk_size == 0 {
            return fail("chunk_size must be at least 1".into());
        }
        if self.grid == 0 {
            return fail("grid must be at least 1".into());
        }
        if !(self.half_range > 0.0 && self.half_range.is_finite()) {
            return fail(format!("half_range must be positive, got {}", self.half_range));
        }
        if self.chunks == 0 {
            return fail("chunks must be at least 1".into());
        }
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return fail(format!("holdout must lie in [0, 1), got {}", self.holdout));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.timing_reps == 0 {
            return fail("timing_reps must be at least 1".into());
        }
        self.format_kind()?;
        self.train_config()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn format_kind(&self) -> Result<IqFileFormat, ConfigError> {
        self.format.parse().map_err(|e: spoofguard::Error| ConfigError(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::square(self.grid, self.half_range).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            sparsity_weight: self.sparsity_weight,
            sparsity_target: self.sparsity_target,
            l2_weight: self.l2_weight,
            latent: self.latent,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
