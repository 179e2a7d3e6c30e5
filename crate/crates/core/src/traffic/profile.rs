//! Device profiles: static/declared values from a spec sheet or scan merged
//! with values extracted from traffic.
//!
//! ```toml
//! model_id = "camera/Acme/XC-100/1.0.4"
//! taxonomy_version = "1.0"
//!
//! [static]
//! NSNS = 2.0
//! OPPR = 3.0
//!
//! [dynamic]
//! UDPO = 0.25
//!
//! [missing]
//! CCOM = "capture spans 3.0 h; 24 h required"
//!
//! [capture_window]
//! start = "2021-03-01T08:00:00.000000Z"
//! end = "2021-03-01T11:00:00.000000Z"
//! ```

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::features::DynamicFeatures;
use super::{format_timestamp, parse_timestamp, FlowRecord, TrafficError};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceProfile {
    pub model_id: String,
    pub taxonomy_version: Option<String>,
    pub tool_version: Option<String>,
    pub static_values: IndexMap<String, f64>,
    pub dynamic_values: IndexMap<String, f64>,
    /// Feature code -> why no value is available.
    pub missing: IndexMap<String, String>,
    pub capture_window: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

/// A profile file holding only the `[static]` section.
pub type StaticProfile = DeviceProfile;

#[derive(Serialize, Deserialize)]
struct WindowFile {
    start: String,
    end: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    taxonomy_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tool_version: Option<String>,
    #[serde(default, rename = "static")]
    static_values: IndexMap<String, f64>,
    #[serde(
        default,
        rename = "dynamic",
        skip_serializing_if = "IndexMap::is_empty"
    )]
    dynamic_values: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    missing: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capture_window: Option<WindowFile>,
}

impl DeviceProfile {
    pub fn value(&self, code: &str) -> Option<f64> {
        self.static_values
            .get(code)
            .or_else(|| self.dynamic_values.get(code))
            .copied()
    }

    /// All present values in taxonomy order.
    pub fn values<'a>(
        &'a self,
        taxonomy: &'a Taxonomy,
    ) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        taxonomy
            .features()
            .filter_map(|f| self.value(&f.code).map(|v| (f.code.as_str(), v)))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TrafficError> {
        let f: ProfileFile = toml::from_str(text)?;
        let capture_window = match f.capture_window {
            Some(w) => Some((parse_timestamp(&w.start)?, parse_timestamp(&w.end)?)),
            None => None,
        };
        Ok(DeviceProfile {
            model_id: f.model_id,
            taxonomy_version: f.taxonomy_version,
            tool_version: f.tool_version,
            static_values: f.static_values,
            dynamic_values: f.dynamic_values,
            missing: f.missing,
            capture_window,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrafficError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, TrafficError> {
        let f = ProfileFile {
            model_id: self.model_id.clone(),
            taxonomy_version: self.taxonomy_version.clone(),
            tool_version: self.tool_version.clone(),
            static_values: self.static_values.clone(),
            dynamic_values: self.dynamic_values.clone(),
            missing: self.missing.clone(),
            capture_window: self.capture_window.map(|(s, e)| WindowFile {
                start: format_timestamp(&s),
                end: format_timestamp(&e),
            }),
        };
        Ok(toml::to_string(&f)?)
    }

    /// Checks codes, sources and value domains against `taxonomy`.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), TrafficError> {
        for (code, &value) in &self.static_values {
            let def = taxonomy
                .feature(code)
                .ok_or_else(|| TrafficError::UnknownFeature(code.clone()))?;
            if def.source.is_dynamic() {
                return Err(TrafficError::Conflict(code.clone()));
            }
            check_value(code, value, def.x_min)?;
        }
        for (code, &value) in &self.dynamic_values {
            let def = taxonomy
                .feature(code)
                .ok_or_else(|| TrafficError::UnknownFeature(code.clone()))?;
            if !def.source.is_dynamic() {
                return Err(TrafficError::NotDynamic {
                    feature: code.clone(),
                });
            }
            check_value(code, value, def.x_min)?;
        }
        for code in self.missing.keys() {
            if taxonomy.feature(code).is_none() {
                return Err(TrafficError::UnknownFeature(code.clone()));
            }
        }
        Ok(())
    }

    /// Combines a static profile with extracted features. Every taxonomy
    /// feature without a value ends up in `missing` with a reason.
    pub fn merge(
        static_profile: &DeviceProfile,
        extracted: &DynamicFeatures,
        flows: &[FlowRecord],
        taxonomy: &Taxonomy,
    ) -> Result<DeviceProfile, TrafficError> {
        let base = DeviceProfile {
            dynamic_values: IndexMap::new(),
            missing: IndexMap::new(),
            ..static_profile.clone()
        };
        base.validate(taxonomy)?;
        let mut out = DeviceProfile {
            taxonomy_version: Some(taxonomy.version.clone()),
            capture_window: capture_window(flows),
            ..base
        };
        for def in taxonomy.features() {
            let code = &def.code;
            if def.source.is_dynamic() {
                match extracted.values.get(code) {
                    Some(&v) => {
                        out.dynamic_values.insert(code.clone(), v);
                    }
                    None => {
                        let reason = extracted
                            .missing
                            .get(code)
                            .cloned()
                            .unwrap_or_else(|| "not extracted".to_string());
                        out.missing.insert(code.clone(), reason);
                    }
                }
            } else if !out.static_values.contains_key(code) {
                out.missing
                    .insert(code.clone(), "not supplied in static profile".to_string());
            }
        }
        // Keep static values in taxonomy order for stable output.
        let mut ordered = IndexMap::new();
        for def in taxonomy.features() {
            if let Some(&v) = out.static_values.get(&def.code) {
                ordered.insert(def.code.clone(), v);
            }
        }
        out.static_values = ordered;
        Ok(out)
    }
}

fn check_value(code: &str, value: f64, x_min: f64) -> Result<(), TrafficError> {
    if !value.is_finite() || value < x_min {
        return Err(TrafficError::InvalidValue {
            feature: code.to_string(),
            value,
            message: format!("must be finite and at least {x_min}"),
        });
    }
    Ok(())
}

fn capture_window(flows: &[FlowRecord]) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
    let start = flows.iter().map(|f| f.start_time).min()?;
    let end = flows.iter().map(|f| f.start_time).max()?;
    Some((start, end))
}
