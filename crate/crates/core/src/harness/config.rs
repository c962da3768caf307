use std::path::PathBuf;

use chrono::{DateTime, Datelike, Months, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::als::AlsConfig;
use crate::forest::ForestConfig;
use crate::metrics::{Grading, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use crate::recommend::Algorithm;
use crate::synth::SynthConfig;
use crate::{Dataset, Error, Result};

/// Everything a run depends on. Serialized as flat TOML: top-level keys plus
/// dotted `als.*`, `forest.*` and `synth.*` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    /// Master seed; module seeds are derived from it.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Train/test boundary; defaults to `train_months` calendar months after
    /// the start of the month of the first event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<DateTime<Utc>>,
    pub train_months: u32,
    pub grading: Grading,
    pub algorithms: Vec<Algorithm>,
    /// Drop items the user bought in training from CF/CB lists.
    pub exclude_purchased: bool,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub als: AlsConfig,
    pub forest: ForestConfig,
    pub synth: SynthConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 10,
            seed: 0,
            threads: None,
            boundary: None,
            train_months: 8,
            grading: Grading::default(),
            algorithms: Algorithm::ALL.to_vec(),
            exclude_purchased: false,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            ci_level: DEFAULT_LEVEL,
            input: None,
            out: None,
            als: AlsConfig::default(),
            forest: ForestConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl EvalConfig {
    /// Parses TOML text and applies `key=value` overrides (dotted keys reach
    /// into sections; values are TOML literals, bare words are strings).
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: EvalConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        if self.bootstrap_resamples == 0 {
            return Err(Error::InvalidConfig("bootstrap_resamples must be positive".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidConfig(format!("ci_level must be in (0, 1), got {}", self.ci_level)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms enabled".into()));
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        self.als.validate()?;
        self.forest.validate()?;
        Ok(())
    }

    pub fn enabled(&self, a: Algorithm) -> bool {
        self.algorithms.contains(&a)
    }

    pub fn resolve_boundary(&self, data: &Dataset) -> Result<DateTime<Utc>> {
        if let Some(b) = self.boundary {
            return Ok(b);
        }
        let first = data.events().first().ok_or(Error::EmptyTraining)?.timestamp;
        let month = Utc
            .with_ymd_and_hms(first.year(), first.month(), 1, 0, 0, 0)
            .single()
            .expect("first of month exists");
        month
            .checked_add_months(Months::new(self.train_months))
            .ok_or_else(|| Error::InvalidConfig("train_months out of range".into()))
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::InvalidConfig(format!("empty key in {spec:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidConfig(format!("{p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
