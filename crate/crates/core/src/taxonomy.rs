//! Hierarchical feature taxonomy: categories, sub-categories and features.
//!
//! The taxonomy is loaded from a TOML config so features can be added or
//! redefined without a rebuild. [`default_taxonomy`] parses the shipped copy.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_TAXONOMY: &str = include_str!("../config/taxonomy.toml");

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("failed to read taxonomy file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed taxonomy config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize taxonomy: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid taxonomy: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "count")]
    Count,
    #[serde(rename = "count/hour")]
    CountPerHour,
    #[serde(rename = "MHz")]
    Mhz,
    #[serde(rename = "MB")]
    Megabytes,
    #[serde(rename = "seconds")]
    Seconds,
    #[serde(rename = "bytes")]
    Bytes,
    #[serde(rename = "percent")]
    Percent,
    #[serde(rename = "binary")]
    Binary,
}

impl Unit {
    /// Percent and binary features live in [0, 1].
    pub fn is_unit_interval(self) -> bool {
        matches!(self, Unit::Percent | Unit::Binary)
    }
}

/// Where a feature value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Spec sheet or other documentation.
    Static,
    /// Supplied by the operator from an external probe (e.g. a port scan).
    Declared,
    /// Extracted from captured flow records.
    Dynamic,
}

impl Source {
    pub fn is_dynamic(self) -> bool {
        self == Source::Dynamic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub code: String,
    pub name: String,
    pub unit: Unit,
    pub source: Source,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCategory {
    pub code: String,
    pub name: String,
    #[serde(rename = "feature", default)]
    pub features: Vec<FeatureDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub code: String,
    pub name: String,
    #[serde(rename = "subcategory", default)]
    pub sub_categories: Vec<SubCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: String,
    #[serde(rename = "category", default)]
    pub categories: Vec<Category>,
}

/// Number of pairwise comparisons each level of the hierarchy requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub categories: usize,
    /// One comparison matrix across every sub-category.
    pub subcategories: usize,
    /// Sub-category pairs when they are only compared inside their category.
    pub subcategories_within_category: usize,
    pub features_total: usize,
}

impl PairCounts {
    /// Questionnaire size under the within-category counting:
    /// category pairs + within-category sub-category pairs + feature pairs.
    pub fn questionnaire_total(&self) -> usize {
        self.categories + self.subcategories_within_category + self.features_total
    }
}

impl fmt::Display for PairCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "categories: {}, sub-categories: {} ({} within categories), features: {}",
            self.categories,
            self.subcategories,
            self.subcategories_within_category,
            self.features_total
        )
    }
}

/// `n·(n−1)/2`.
pub fn pairwise_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// The shipped default taxonomy (3 categories, 7 sub-categories, 30 features).
pub fn default_taxonomy() -> Taxonomy {
    Taxonomy::from_toml_str(DEFAULT_TAXONOMY).expect("shipped taxonomy config is valid")
}

/// Source text of the shipped taxonomy config.
pub fn default_taxonomy_source() -> &'static str {
    DEFAULT_TAXONOMY
}

impl Taxonomy {
    /// Parses a taxonomy and rejects it if any invariant is violated.
    pub fn from_toml_str(text: &str) -> Result<Self, TaxonomyError> {
        let taxonomy: Taxonomy = toml::from_str(text)?;
        let violations = validate(&taxonomy);
        if violations.is_empty() {
            Ok(taxonomy)
        } else {
            Err(TaxonomyError::Invalid(violations))
        }
    }

    /// Parses without validation, for tooling that wants to report violations.
    pub fn from_toml_str_unchecked(text: &str) -> Result<Self, TaxonomyError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TaxonomyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TaxonomyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, TaxonomyError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn subcategories(&self) -> impl Iterator<Item = &SubCategory> {
        self.categories.iter().flat_map(|c| c.sub_categories.iter())
    }

    pub fn features(&self) -> impl Iterator<Item = &FeatureDef> {
        self.subcategories().flat_map(|s| s.features.iter())
    }

    pub fn count_features(&self) -> usize {
        self.features().count()
    }

    pub fn feature(&self, code: &str) -> Option<&FeatureDef> {
        self.features().find(|f| f.code == code)
    }

    pub fn category(&self, code: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.code == code)
    }

    pub fn subcategory(&self, code: &str) -> Option<&SubCategory> {
        self.subcategories().find(|s| s.code == code)
    }

    /// Category that owns the given sub-category.
    pub fn category_of_subcategory(&self, sub: &str) -> Option<&Category> {
        self.categories
            .iter()
            .find(|c| c.sub_categories.iter().any(|s| s.code == sub))
    }

    /// Sub-category that owns the given feature.
    pub fn subcategory_of_feature(&self, feature: &str) -> Option<&SubCategory> {
        self.subcategories()
            .find(|s| s.features.iter().any(|f| f.code == feature))
    }

    pub fn feature_codes(&self) -> Vec<&str> {
        self.features().map(|f| f.code.as_str()).collect()
    }

    pub fn subcategory_codes(&self) -> Vec<&str> {
        self.subcategories().map(|s| s.code.as_str()).collect()
    }

    /// Position of a feature in taxonomy order.
    pub fn feature_index(&self, code: &str) -> Option<usize> {
        self.features().position(|f| f.code == code)
    }

    pub fn subcategory_index(&self, code: &str) -> Option<usize> {
        self.subcategories().position(|s| s.code == code)
    }

    pub fn pair_counts(&self) -> PairCounts {
        let subcategories_within_category = self
            .categories
            .iter()
            .map(|c| pairwise_count(c.sub_categories.len()))
            .sum();
        PairCounts {
            categories: pairwise_count(self.categories.len()),
            subcategories: pairwise_count(self.subcategories().count()),
            subcategories_within_category,
            features_total: self
                .subcategories()
                .map(|s| pairwise_count(s.features.len()))
                .sum(),
        }
    }

    /// Expected-range classes, keyed by `x_max`, with the features in each.
    pub fn range_classes(&self) -> BTreeMap<String, Vec<&str>> {
        let mut out: BTreeMap<String, Vec<&str>> = BTreeMap::new();
        for f in self.features() {
            out.entry(format_range_class(f.x_max))
                .or_default()
                .push(&f.code);
        }
        out
    }
}

/// Canonical key for a range class (`x_max` printed without trailing zeros).
pub fn format_range_class(x_max: f64) -> String {
    if x_max.fract() == 0.0 && x_max.abs() < 1e15 {
        format!("{}", x_max as i64)
    } else {
        format!("{x_max}")
    }
}

/// Lists every invariant violation; empty iff the taxonomy is valid.
pub fn validate(taxonomy: &Taxonomy) -> Vec<String> {
    let mut out = Vec::new();
    let mut cat_codes = HashSet::new();
    let mut sub_codes = HashSet::new();
    let mut feat_codes = HashSet::new();

    if taxonomy.categories.is_empty() {
        out.push("taxonomy has no categories".to_string());
    }
    for cat in &taxonomy.categories {
        if !cat_codes.insert(cat.code.as_str()) {
            out.push(format!("duplicate category code {}", cat.code));
        }
        if cat.sub_categories.is_empty() {
            out.push(format!("category {} has no sub-categories", cat.code));
        }
        for sub in &cat.sub_categories {
            if !sub_codes.insert(sub.code.as_str()) {
                out.push(format!("duplicate sub-category code {}", sub.code));
            }
            if sub.features.is_empty() {
                out.push(format!("sub-category {} has no features", sub.code));
            }
            for feat in &sub.features {
                if !feat_codes.insert(feat.code.as_str()) {
                    out.push(format!("duplicate feature code {}", feat.code));
                }
                if feat.code.len() != 4 || !feat.code.chars().all(|c| c.is_ascii_uppercase()) {
                    out.push(format!(
                        "feature code {} is not a 4-letter uppercase identifier",
                        feat.code
                    ));
                }
                if !(feat.x_min.is_finite() && feat.x_max.is_finite()) {
                    out.push(format!("feature {} has a non-finite range", feat.code));
                } else if feat.x_min >= feat.x_max {
                    out.push(format!(
                        "feature {} has x_min {} >= x_max {}",
                        feat.code, feat.x_min, feat.x_max
                    ));
                }
                if feat.unit.is_unit_interval() && feat.x_max != 1.0 {
                    out.push(format!(
                        "feature {} is {:?} but x_max is {} (expected 1)",
                        feat.code, feat.unit, feat.x_max
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_structure() {
        let t = default_taxonomy();
        assert_eq!(t.categories.len(), 3);
        assert_eq!(t.subcategories().count(), 7);
        assert_eq!(t.count_features(), 30);
        assert_eq!(
            t.subcategory_codes(),
            vec!["SNA", "RSR", "FNC", "INT", "INB", "OUT", "SRD"]
        );
        let per_sub: Vec<usize> = t
            .subcategories()
            .map(|s| pairwise_count(s.features.len()))
            .collect();
        assert_eq!(per_sub, vec![1, 3, 3, 10, 15, 15, 10]);
    }

    #[test]
    fn default_pair_counts() {
        let c = default_taxonomy().pair_counts();
        assert_eq!(c.categories, 3);
        assert_eq!(c.subcategories, 21);
        assert_eq!(c.subcategories_within_category, 5);
        assert_eq!(c.features_total, 57);
        assert_eq!(c.questionnaire_total(), 65);
    }

    #[test]
    fn pairwise_count_examples() {
        assert_eq!(pairwise_count(1), 0);
        assert_eq!(pairwise_count(5), 10);
        assert_eq!(pairwise_count(6), 15);
        assert_eq!(pairwise_count(7), 21);
    }

    #[test]
    fn reference_ranges() {
        let t = default_taxonomy();
        for (code, max) in [
            ("ENCI", 1.0),
            ("BATT", 1.0),
            ("NSNS", 10.0),
            ("FINT", 10.0),
            ("PCKI", 100.0),
            ("IATO", 100.0),
            ("CPUS", 1000.0),
            ("IATI", 1000.0),
            ("DINT", 1000.0),
        ] {
            assert_eq!(t.feature(code).unwrap().x_max, max, "{code}");
        }
        assert!(t.features().all(|f| f.x_min == 0.0));
        let classes = t.range_classes();
        assert_eq!(
            classes.keys().collect::<Vec<_>>(),
            vec!["1", "10", "100", "1000"]
        );
    }

    #[test]
    fn default_sources() {
        let t = default_taxonomy();
        for cat in &t.categories {
            for f in cat.sub_categories.iter().flat_map(|s| &s.features) {
                let expected = match (cat.code.as_str(), f.code.as_str()) {
                    (_, "STOS") | (_, "OPPR") => Source::Declared,
                    (_, "CCOM") => Source::Dynamic,
                    ("NT", _) => Source::Dynamic,
                    _ => Source::Static,
                };
                assert_eq!(f.source, expected, "{}", f.code);
            }
        }
    }

    #[test]
    fn default_validates_clean() {
        assert!(validate(&default_taxonomy()).is_empty());
    }

    #[test]
    fn duplicate_feature_code_is_reported() {
        let mut t = default_taxonomy();
        t.categories[1].sub_categories[0].features[0].code = "NSNS".into();
        let v = validate(&t);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("NSNS"));
    }

    #[test]
    fn empty_range_is_reported() {
        let mut t = default_taxonomy();
        let f = &mut t.categories[0].sub_categories[1].features[0];
        f.x_max = f.x_min;
        let v = validate(&t);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("CPUS"));
    }

    #[test]
    fn percent_feature_needs_unit_range() {
        let mut t = default_taxonomy();
        t.categories[2].sub_categories[0].features[4].x_max = 100.0;
        let v = validate(&t);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("ENCI"));
    }

    #[test]
    fn empty_subcategory_is_reported() {
        let mut t = default_taxonomy();
        t.categories[0].sub_categories[0].features.clear();
        let v = validate(&t);
        assert!(v.iter().any(|m| m.contains("SNA")));
    }

    #[test]
    fn serialization_round_trip() {
        let t = default_taxonomy();
        let text = t.to_toml_string().unwrap();
        let back = Taxonomy::from_toml_str(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn invalid_config_rejected_on_load() {
        let mut t = default_taxonomy();
        t.categories[0].sub_categories[0].features[1].code = "NSNS".into();
        let text = t.to_toml_string().unwrap();
        match Taxonomy::from_toml_str(&text) {
            Err(TaxonomyError::Invalid(v)) => assert!(v[0].contains("NSNS")),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn lookups() {
        let t = default_taxonomy();
        assert_eq!(t.category_of_subcategory("SRD").unwrap().code, "NT");
        assert_eq!(t.subcategory_of_feature("CCOM").unwrap().code, "FNC");
        assert_eq!(t.feature_index("NSNS"), Some(0));
        assert_eq!(t.feature_index("OPPR"), Some(29));
        assert!(t.feature("XXXX").is_none());
    }
}
