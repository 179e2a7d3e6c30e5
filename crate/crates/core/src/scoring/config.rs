//! Scenario configuration: direction of influence (δ) per feature, shape
//! parameter β per range class, and label bin count.
//!
//! ```toml
//! [[scenario]]
//! code = "ddos_flooding"
//! name = "DDoS flooding"
//! bins = 7
//!
//! [scenario.beta]   # keyed by range class (x_max); 5 when absent
//! "1000" = 5.0
//!
//! [scenario.delta]  # every taxonomy feature, +1 or -1
//! NSNS = -1
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::taxonomy::{format_range_class, Taxonomy};

pub const DEFAULT_BETA: f64 = 5.0;
pub const DEFAULT_BINS: usize = 7;

fn default_bins() -> usize {
    DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub code: String,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub beta: BTreeMap<String, f64>,
    #[serde(default)]
    pub delta: IndexMap<String, i64>,
}

impl ScenarioSpec {
    pub fn beta_for(&self, x_max: f64) -> f64 {
        self.beta
            .get(&format_range_class(x_max))
            .copied()
            .unwrap_or(DEFAULT_BETA)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<ScenarioSpec>,
}

const DEFAULT_SCENARIOS: &str = include_str!("../../config/scenarios.toml");

/// The shipped example configuration. Its δ values are advisory.
pub fn default_scenarios() -> ScenarioConfig {
    ScenarioConfig::from_toml_str(DEFAULT_SCENARIOS).expect("bundled scenario config is valid")
}

pub fn default_scenarios_source() -> &'static str {
    DEFAULT_SCENARIOS
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScoringError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScoringError::Config(e.to_string()))?;
        let mut seen = std::collections::HashSet::new();
        for s in &cfg.scenarios {
            if !seen.insert(s.code.as_str()) {
                return Err(ScoringError::Config(format!(
                    "duplicate scenario {}",
                    s.code
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScoringError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| ScoringError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn scenario(&self, code: &str) -> Option<&ScenarioSpec> {
        self.scenarios.iter().find(|s| s.code == code)
    }

    pub fn codes(&self) -> Vec<&str> {
        self.scenarios.iter().map(|s| s.code.as_str()).collect()
    }

    /// Builds normalization parameters for every scenario, surfacing the
    /// first problem found.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), ScoringError> {
        for s in &self.scenarios {
            super::NormalizationParams::<f64>::new(s, taxonomy)?;
        }
        Ok(())
    }
}
