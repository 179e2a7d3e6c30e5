//! Persisted scenario models: averaged weights plus provenance.
//!
//! ```toml
//! format = "dscore-model/1"
//! tool_version = "0.1.0"
//! taxonomy_version = "1.0"
//! scenario = "ddos_flooding"
//!
//! [provenance]
//! method = "eigenvector"
//! cr_threshold = 0.1
//! contributing_responses = ["r01", "r02"]
//!
//! [provenance.mean_cr]
//! r01 = 0.031
//! r02 = 0.172
//!
//! [subcategory_weights]
//! SNA = 0.08
//! # ...
//!
//! [feature_weights]
//! NSNS = 0.02
//! # ...
//! ```

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::{ScenarioWeights, WeightMethod, WeightVector};
use crate::taxonomy::Taxonomy;

pub const MODEL_FORMAT: &str = "dscore-model/1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("model serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported model format `{0}`")]
    Format(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("taxonomy version mismatch: model built for {model}, loaded taxonomy is {taxonomy}")]
    VersionMismatch { model: String, taxonomy: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Provenance {
    method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cr_threshold: Option<f64>,
    #[serde(default)]
    include_subcategory_cr: bool,
    contributing_responses: Vec<String>,
    mean_cr: IndexMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    format: String,
    tool_version: String,
    taxonomy_version: String,
    scenario: String,
    provenance: Provenance,
    subcategory_weights: IndexMap<String, f64>,
    feature_weights: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub tool_version: String,
    pub taxonomy_version: String,
    pub method: WeightMethod,
    pub include_subcategory_cr: bool,
    pub weights: ScenarioWeights<f64>,
}

fn to_vector(map: IndexMap<String, f64>, what: &str) -> Result<WeightVector<f64>, ModelError> {
    if map.is_empty() {
        return Err(ModelError::Invalid(format!("{what} is empty")));
    }
    if let Some((k, v)) = map.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(ModelError::Invalid(format!("{what}.{k} = {v}")));
    }
    let sum: f64 = map.values().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(ModelError::Invalid(format!(
            "{what} sums to {sum}, expected 1"
        )));
    }
    let (labels, weights) = map.into_iter().unzip();
    Ok(WeightVector { labels, weights })
}

impl ModelFile {
    pub fn new(
        weights: ScenarioWeights<f64>,
        taxonomy: &Taxonomy,
        method: WeightMethod,
        include_subcategory_cr: bool,
    ) -> Self {
        ModelFile {
            tool_version: crate::TOOL_VERSION.to_string(),
            taxonomy_version: taxonomy.version.clone(),
            method,
            include_subcategory_cr,
            weights,
        }
    }

    pub fn to_toml_string(&self) -> Result<String, ModelError> {
        let w = &self.weights;
        let raw = RawModel {
            format: MODEL_FORMAT.to_string(),
            tool_version: self.tool_version.clone(),
            taxonomy_version: self.taxonomy_version.clone(),
            scenario: w.scenario.clone(),
            provenance: Provenance {
                method: self.method.to_string(),
                cr_threshold: w.cr_threshold,
                include_subcategory_cr: self.include_subcategory_cr,
                contributing_responses: w.contributing_responses.clone(),
                mean_cr: w
                    .mean_cr_per_response
                    .iter()
                    .map(|(k, v)| (k.clone(), *v))
                    .collect(),
            },
            subcategory_weights: w
                .subcategory_weights
                .iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            feature_weights: w
                .feature_weights
                .iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        };
        Ok(toml::to_string(&raw)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let raw: RawModel = toml::from_str(text)?;
        if raw.format != MODEL_FORMAT {
            return Err(ModelError::Format(raw.format));
        }
        let method = raw.provenance.method.parse().map_err(ModelError::Invalid)?;
        let weights = ScenarioWeights {
            scenario: raw.scenario,
            feature_weights: to_vector(raw.feature_weights, "feature_weights")?,
            subcategory_weights: to_vector(raw.subcategory_weights, "subcategory_weights")?,
            contributing_responses: raw.provenance.contributing_responses,
            mean_cr_per_response: raw.provenance.mean_cr.into_iter().collect(),
            cr_threshold: raw.provenance.cr_threshold,
        };
        Ok(ModelFile {
            tool_version: raw.tool_version,
            taxonomy_version: raw.taxonomy_version,
            method,
            include_subcategory_cr: raw.provenance.include_subcategory_cr,
            weights,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Requires a matching taxonomy version and exactly the taxonomy's
    /// feature and sub-category codes.
    pub fn check_taxonomy(&self, taxonomy: &Taxonomy) -> Result<(), ModelError> {
        if self.taxonomy_version != taxonomy.version {
            return Err(ModelError::VersionMismatch {
                model: self.taxonomy_version.clone(),
                taxonomy: taxonomy.version.clone(),
            });
        }
        let mut have: Vec<&str> = self
            .weights
            .feature_weights
            .labels
            .iter()
            .map(String::as_str)
            .collect();
        let mut want = taxonomy.feature_codes();
        have.sort_unstable();
        want.sort_unstable();
        if have != want {
            return Err(ModelError::Invalid(
                "feature codes differ from the taxonomy".into(),
            ));
        }
        let mut have: Vec<&str> = self
            .weights
            .subcategory_weights
            .labels
            .iter()
            .map(String::as_str)
            .collect();
        let mut want = taxonomy.subcategory_codes();
        have.sort_unstable();
        want.sort_unstable();
        if have != want {
            return Err(ModelError::Invalid(
                "sub-category codes differ from the taxonomy".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::default_taxonomy;

    fn uniform_model() -> ModelFile {
        let t = default_taxonomy();
        let f: Vec<String> = t.feature_codes().iter().map(|s| s.to_string()).collect();
        let s: Vec<String> = t
            .subcategory_codes()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let weights = ScenarioWeights {
            scenario: "ddos_flooding".into(),
            feature_weights: WeightVector::normalized(f.clone(), vec![1.0; f.len()]),
            subcategory_weights: WeightVector::normalized(s.clone(), vec![1.0; s.len()]),
            contributing_responses: vec!["a".into()],
            mean_cr_per_response: [("a".to_string(), 0.02), ("b".to_string(), 0.3)]
                .into_iter()
                .collect(),
            cr_threshold: Some(0.1),
        };
        ModelFile::new(weights, &t, WeightMethod::Eigenvector, false)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let m = uniform_model();
        let text = m.to_toml_string().unwrap();
        let back = ModelFile::from_toml_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_toml_string().unwrap(), text);
        assert_eq!(back.weights.dropped_responses(), ["b"]);
        back.check_taxonomy(&default_taxonomy()).unwrap();
    }

    #[test]
    fn version_mismatch() {
        let mut m = uniform_model();
        m.taxonomy_version = "0.9".into();
        assert!(matches!(
            m.check_taxonomy(&default_taxonomy()),
            Err(ModelError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_unnormalized() {
        let text = uniform_model()
            .to_toml_string()
            .unwrap()
            .replacen("NSNS = ", "NSNS = 5", 1);
        assert!(matches!(
            ModelFile::from_toml_str(&text),
            Err(ModelError::Invalid(_))
        ));
    }
}
