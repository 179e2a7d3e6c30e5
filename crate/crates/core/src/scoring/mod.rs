//! Feature normalization, D-Score computation, letter labels and maximin
//! ranking.

mod config;

pub use config::{
    default_scenarios, default_scenarios_source, ScenarioConfig, ScenarioSpec, DEFAULT_BETA,
    DEFAULT_BINS,
};

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::ahp::ScenarioWeights;
use crate::scalar::Real;
use crate::taxonomy::{format_range_class, Taxonomy};
use crate::traffic::DeviceProfile;

/// Share of the total weight that must sit on present features.
pub const MIN_PRESENT_MASS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("scenario config: {0}")]
    Config(String),
    #[error("scenario {scenario}: no direction of influence for {}", features.join(", "))]
    MissingDelta {
        scenario: String,
        features: Vec<String>,
    },
    #[error("scenario {scenario}: delta for {feature} is {value}; expected -1 or +1")]
    BadDelta {
        scenario: String,
        feature: String,
        value: i64,
    },
    #[error("scenario {scenario}: unknown feature {feature}")]
    UnknownFeature { scenario: String, feature: String },
    #[error("scenario {scenario}: beta for range class {class} must be positive, got {value}")]
    BadBeta {
        scenario: String,
        class: String,
        value: f64,
    },
    #[error("scenario {scenario}: range class {class} does not exist in the taxonomy")]
    UnknownRangeClass { scenario: String, class: String },
    #[error("feature {feature} has x_min = {x_min}; only x_min = 0 is supported")]
    NonZeroXMin { feature: String, x_min: f64 },
    #[error("bin count {0} out of range (2..=26)")]
    Bins(usize),
    #[error("model is for scenario {model}, parameters for {params}")]
    ScenarioMismatch { model: String, params: String },
    #[error(
        "insufficient profile for {model_id}: only {present_mass:.3} of the weight is on present features; missing {}",
        missing.join(", ")
    )]
    InsufficientProfile {
        model_id: String,
        present_mass: f64,
        missing: Vec<String>,
    },
    #[error("negative or non-finite value {value} for {feature}")]
    BadValue { feature: String, value: f64 },
    #[error("model {model} is scored on {got:?}, expected {expected:?}")]
    Coverage {
        model: String,
        expected: Vec<String>,
        got: Vec<String>,
    },
}

/// Direction of influence of a feature on detectability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delta {
    /// Larger values make the attack easier to detect.
    Plus,
    /// Larger values make the attack harder to detect.
    Minus,
}

impl Delta {
    pub fn from_sign(v: i64) -> Option<Delta> {
        match v {
            1 => Some(Delta::Plus),
            -1 => Some(Delta::Minus),
            _ => None,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Delta::Plus => 1,
            Delta::Minus => -1,
        }
    }
}

/// `α = 1 / (β · 10^(log10(x_max) − 1))`, evaluated as `10 / (β · x_max)` so
/// powers of ten come out exact.
pub fn alpha<T: Real>(x_max: T, beta: T) -> Result<T, ScoringError> {
    if !(x_max > T::zero() && x_max.is_finite()) {
        return Err(ScoringError::Domain(format!(
            "x_max must be positive, got {x_max}"
        )));
    }
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(ScoringError::Domain(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(T::lit(10.0) / (beta * x_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams<T> {
    pub alpha: T,
    pub beta: T,
    pub delta: Delta,
    pub x_max: T,
}

/// Maps a raw value into `[0, 1]`: `tanh(αx)` or `1 + tanh(−αx)`.
pub fn normalize<T: Real>(x: T, params: &FeatureParams<T>) -> T {
    let t = (params.alpha * x).tanh();
    match params.delta {
        Delta::Plus => t,
        Delta::Minus => T::one() + (-params.alpha * x).tanh(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams<T> {
    pub scenario: String,
    pub bins: usize,
    pub features: IndexMap<String, FeatureParams<T>>,
}

impl<T: Real> NormalizationParams<T> {
    pub fn new(spec: &ScenarioSpec, taxonomy: &Taxonomy) -> Result<Self, ScoringError> {
        let scenario = spec.code.clone();
        if !(2..=26).contains(&spec.bins) {
            return Err(ScoringError::Bins(spec.bins));
        }
        for code in spec.delta.keys() {
            if taxonomy.feature(code).is_none() {
                return Err(ScoringError::UnknownFeature {
                    scenario,
                    feature: code.clone(),
                });
            }
        }
        let classes = taxonomy.range_classes();
        for (class, &value) in &spec.beta {
            if !classes.contains_key(class) {
                return Err(ScoringError::UnknownRangeClass {
                    scenario,
                    class: class.clone(),
                });
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScoringError::BadBeta {
                    scenario,
                    class: class.clone(),
                    value,
                });
            }
        }
        let missing: Vec<String> = taxonomy
            .features()
            .filter(|f| !spec.delta.contains_key(&f.code))
            .map(|f| f.code.clone())
            .collect();
        if !missing.is_empty() {
            return Err(ScoringError::MissingDelta {
                scenario,
                features: missing,
            });
        }

        let mut features = IndexMap::new();
        for f in taxonomy.features() {
            if f.x_min != 0.0 {
                return Err(ScoringError::NonZeroXMin {
                    feature: f.code.clone(),
                    x_min: f.x_min,
                });
            }
            let raw = spec.delta[&f.code];
            let delta = Delta::from_sign(raw).ok_or_else(|| ScoringError::BadDelta {
                scenario: scenario.clone(),
                feature: f.code.clone(),
                value: raw,
            })?;
            let beta = T::lit(spec.beta_for(f.x_max));
            let x_max = T::lit(f.x_max);
            features.insert(
                f.code.clone(),
                FeatureParams {
                    alpha: alpha(x_max, beta)?,
                    beta,
                    delta,
                    x_max,
                },
            );
        }
        Ok(NormalizationParams {
            scenario,
            bins: spec.bins,
            features,
        })
    }

    pub fn get(&self, code: &str) -> Option<&FeatureParams<T>> {
        self.features.get(code)
    }
}

/// Range class label for display (`"(0,1000)"`).
pub fn range_label(x_max: f64) -> String {
    format!("(0,{})", format_range_class(x_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingFeature<T> {
    pub code: String,
    pub weight: T,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCard<T> {
    pub scenario: String,
    pub model_id: String,
    /// Normalized values of present features, in model order.
    pub normalized_values: IndexMap<String, T>,
    pub d_score: T,
    pub label: char,
    /// Weight mass on present features before renormalization.
    pub present_mass: T,
    pub missing_features: Vec<MissingFeature<T>>,
}

impl<T: Real> ScoreCard<T> {
    /// `model scenario d_score label`
    pub fn summary_line(&self) -> String {
        format!(
            "{} {} {:.3} {}",
            self.model_id, self.scenario, self.d_score, self.label
        )
    }
}

/// Weighted sum of normalized values, renormalized over present features.
pub fn d_score<T: Real>(
    weights: &ScenarioWeights<T>,
    profile: &DeviceProfile,
    params: &NormalizationParams<T>,
) -> Result<ScoreCard<T>, ScoringError> {
    if weights.scenario != params.scenario {
        return Err(ScoringError::ScenarioMismatch {
            model: weights.scenario.clone(),
            params: params.scenario.clone(),
        });
    }
    let mut normalized_values = IndexMap::new();
    let mut missing_features = Vec::new();
    // Summing in code order makes the score independent of how the model
    // enumerates its features.
    let mut terms: BTreeMap<&str, (T, T)> = BTreeMap::new();
    let total: T = weights.feature_weights.sum();
    for (code, w) in weights.feature_weights.iter() {
        let fp = params
            .get(code)
            .ok_or_else(|| ScoringError::UnknownFeature {
                scenario: params.scenario.clone(),
                feature: code.to_string(),
            })?;
        match profile.value(code) {
            Some(v) => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ScoringError::BadValue {
                        feature: code.to_string(),
                        value: v,
                    });
                }
                let x = normalize(T::lit(v), fp);
                normalized_values.insert(code.to_string(), x);
                terms.insert(code, (w, x));
            }
            None => missing_features.push(MissingFeature {
                code: code.to_string(),
                weight: w,
                note: profile
                    .missing
                    .get(code)
                    .map_or("no value in profile".to_string(), |r| r.clone()),
            }),
        }
    }
    let present: T = terms.values().map(|&(w, _)| w).sum();
    let present_mass = if total > T::zero() {
        present / total
    } else {
        T::zero()
    };
    if present_mass < T::lit(MIN_PRESENT_MASS) || present <= T::zero() {
        return Err(ScoringError::InsufficientProfile {
            model_id: profile.model_id.clone(),
            present_mass: present_mass.to_f64_lossy(),
            missing: missing_features.iter().map(|m| m.code.clone()).collect(),
        });
    }
    let raw: T = terms.values().map(|&(w, x)| w * x).sum::<T>() / present;
    let d = raw.max(T::zero()).min(T::one());
    for m in &mut missing_features {
        m.note = format!("{} (weight renormalized over present features)", m.note);
    }
    Ok(ScoreCard {
        scenario: params.scenario.clone(),
        model_id: profile.model_id.clone(),
        normalized_values,
        d_score: d,
        label: label(d, params.bins)?,
        present_mass,
        missing_features,
    })
}

/// Zero-based bin index of `d` under `bins` equal-width bins; a value on a
/// boundary belongs to the upper bin.
pub fn bin_index<T: Real>(d: T, bins: usize) -> Result<usize, ScoringError> {
    if !(2..=26).contains(&bins) {
        return Err(ScoringError::Bins(bins));
    }
    let d = d.max(T::zero()).min(T::one());
    let b = T::from_usize_lossy(bins);
    let mut k = (d * b).floor().to_usize().unwrap_or(0);
    // Guard against d·bins rounding just below an exact boundary.
    if k + 1 < bins && T::from_usize_lossy(k + 1) / b <= d {
        k += 1;
    }
    Ok(k.min(bins - 1))
}

/// Letter label: the top bin is `'A'`.
pub fn label<T: Real>(d: T, bins: usize) -> Result<char, ScoringError> {
    let k = bin_index(d, bins)?;
    Ok((b'A' + (bins - 1 - k) as u8) as char)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximinRow<T> {
    pub model_id: String,
    pub min: T,
    pub mean: T,
    pub max: T,
    /// Scores in scenario-code order.
    pub scores: Vec<(String, T)>,
}

/// Ranks models by their worst-case score: min descending, then mean
/// descending, then model id.
pub fn maximin_rank<T: Real>(
    scores: &BTreeMap<(String, String), T>,
) -> Result<Vec<MaximinRow<T>>, ScoringError> {
    let mut by_model: BTreeMap<&str, Vec<(String, T)>> = BTreeMap::new();
    for ((model, scenario), &s) in scores {
        by_model
            .entry(model)
            .or_default()
            .push((scenario.clone(), s));
    }
    let mut expected: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (model, list) in by_model {
        let got: Vec<String> = list.iter().map(|(s, _)| s.clone()).collect();
        match &expected {
            None => expected = Some(got.clone()),
            Some(e) if *e != got => {
                let union: BTreeSet<String> = e.iter().chain(&got).cloned().collect();
                return Err(ScoringError::Coverage {
                    model: model.to_string(),
                    expected: union.into_iter().collect(),
                    got,
                });
            }
            _ => {}
        }
        let vals: Vec<T> = list.iter().map(|&(_, s)| s).collect();
        let min = vals.iter().copied().fold(T::infinity(), T::min);
        let max = vals.iter().copied().fold(T::neg_infinity(), T::max);
        let mean = vals.iter().copied().sum::<T>() / T::from_usize_lossy(vals.len());
        rows.push(MaximinRow {
            model_id: model.to_string(),
            min,
            mean,
            max,
            scores: list,
        });
    }
    rows.sort_by(|a, b| {
        b.min
            .partial_cmp(&a.min)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                b.mean
                    .partial_cmp(&a.mean)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    Ok(rows)
}
