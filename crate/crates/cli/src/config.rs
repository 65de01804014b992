use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thd_core::data::Schema;
use thd_core::geometry::{Lens, Metric};
use thd_core::report::NetworkFormat;
use thd_core::stats::StatsConfig;
use thd_core::thd::ThdParams;

use crate::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "THD_OUTPUT_DIR";

/// One experiment: where the data is, how to read it, and how to decompose
/// and report it. Relative paths are resolved against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: Schema,
    pub metric: Metric,
    /// One decomposition is computed per lens.
    pub lenses: Vec<Lens>,
    pub initial_resolution: usize,
    pub resolution_increment: usize,
    pub gain: f64,
    pub split_threshold: usize,
    pub max_resolution: usize,
    pub histogram_bins: usize,
    pub stats: StatsConfig,
    /// Label level treated as the bad outcome in explanations; defaults to
    /// the alphabetically first level.
    pub risky_level: Option<String>,
    /// Verdict threshold on the risky fraction; defaults to the dataset-wide
    /// fraction.
    pub verdict_threshold: Option<f64>,
    pub k_votes: usize,
    pub network_format: NetworkFormat,
    pub output_dir: PathBuf,
    /// Recorded for provenance; every algorithm in the pipeline is
    /// deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ThdParams::default();
        RunConfig {
            dataset: PathBuf::new(),
            schema: Schema::default(),
            metric: p.metric,
            lenses: vec![Lens::mds(), Lens::nhl()],
            initial_resolution: p.initial_resolution,
            resolution_increment: p.resolution_increment,
            gain: p.gain,
            split_threshold: p.split_threshold,
            max_resolution: p.max_resolution,
            histogram_bins: p.histogram_bins,
            stats: StatsConfig::default(),
            risky_level: None,
            verdict_threshold: None,
            k_votes: thd_core::classifier::DEFAULT_K_VOTES,
            network_format: NetworkFormat::Graphml,
            output_dir: PathBuf::from("thd-out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn thd_params(&self, lens: &Lens) -> ThdParams {
        ThdParams {
            initial_resolution: self.initial_resolution,
            resolution_increment: self.resolution_increment,
            gain: self.gain,
            split_threshold: self.split_threshold,
            max_resolution: self.max_resolution,
            histogram_bins: self.histogram_bins,
            metric: self.metric,
            lens: lens.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dataset.as_os_str().is_empty() {
            return Err(CliError::Config("`dataset` is required".into()));
        }
        if self.lenses.is_empty() {
            return Err(CliError::Config("`lenses` must name at least one lens".into()));
        }
        for lens in &self.lenses {
            self.thd_params(lens).validate()?;
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha <= 1.0) {
            return Err(CliError::Config(format!("stats.alpha must be in (0, 1], got {}", self.stats.alpha)));
        }
        if self.stats.top_k == 0 {
            return Err(CliError::Config("stats.top_k must be >= 1".into()));
        }
        if self.k_votes == 0 {
            return Err(CliError::Config("k_votes must be >= 1".into()));
        }
        if let Some(t) = self.verdict_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(CliError::Config(format!("verdict_threshold must be in [0, 1], got {t}")));
            }
        }
        Ok(())
    }

    /// Reads a config file, applies `key=value` overrides, and resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        apply_overrides(&mut value, overrides)?;
        let mut cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset = base.join(&cfg.dataset);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Dataset-relative names for each lens's output directory: the lens
    /// name, suffixed with its position when two lenses share a name.
    pub fn lens_dirs(&self) -> Vec<String> {
        self.lenses
            .iter()
            .enumerate()
            .map(|(i, lens)| {
                let shared = self.lenses.iter().filter(|l| l.name() == lens.name()).count() > 1;
                if shared {
                    format!("{}-{}", lens.name(), i + 1)
                } else {
                    lens.name().to_string()
                }
            })
            .collect()
    }
}

/// Applies `a.b.c=value` overrides to a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{item}` is not of the form key=value")))?;
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(CliError::Usage(format!("override `{item}` has an empty key")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            if !node.is_object() {
                return Err(CliError::Usage(format!("override `{item}`: `{part}` is not inside an object")));
            }
            node = node
                .as_object_mut()
                .expect("checked above")
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        match node.as_object_mut() {
            Some(obj) => {
                obj.insert(parts[parts.len() - 1].to_string(), value);
            }
            None => return Err(CliError::Usage(format!("override `{item}` does not address an object field"))),
        }
    }
    Ok(())
}
