//! Analytic hierarchy process: comparison matrices, principal-eigenvector
//! weights, consistency ratios, cross-expert aggregation and agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::responses::{CompletedResponse, PairKey, MAX_JUDGMENT};
use crate::scalar::Real;
use crate::taxonomy::Taxonomy;

/// Iteration cap for the power method.
pub const MAX_POWER_ITERATIONS: usize = 10_000;
/// Convergence threshold on successive normalized iterates.
pub const POWER_TOLERANCE: f64 = 1e-10;

/// Saaty random consistency index for orders 1..=10.
const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

pub fn random_index(n: usize) -> Option<f64> {
    RANDOM_INDEX.get(n.checked_sub(1)?).copied()
}

#[derive(Debug, Error, PartialEq)]
pub enum AhpError {
    #[error("no judgment for pair ({left}, {right})")]
    Incomplete { left: String, right: String },
    #[error("judgment magnitude {0} exceeds the scale")]
    JudgmentOutOfScale(i8),
    #[error("invalid comparison matrix: {0}")]
    InvalidMatrix(String),
    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("no random consistency index for matrix order {0}")]
    NoRandomIndex(usize),
    #[error("no responses for scenario {scenario} survive the consistency filter{}", threshold_note(.threshold))]
    EmptyCohort {
        scenario: String,
        threshold: Option<f64>,
    },
    #[error("responses address different scenarios: {0} and {1}")]
    MixedScenarios(String, String),
    #[error("duplicate response id {0}")]
    DuplicateResponse(String),
    #[error("weight vectors have different labels")]
    LabelMismatch,
    #[error("weight vector {0} has zero norm; cosine similarity undefined")]
    ZeroNorm(usize),
    #[error("agreement needs at least two weight vectors, got {0}")]
    TooFewVectors(usize),
}

fn threshold_note(t: &Option<f64>) -> String {
    match t {
        Some(t) => format!(" (mean CR <= {t})"),
        None => String::new(),
    }
}

/// Maps questionnaire magnitudes 0..=5 onto the 1–9 ratio scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SaatyScale<T> {
    values: [T; 6],
}

impl<T: Real> Default for SaatyScale<T> {
    fn default() -> Self {
        SaatyScale {
            values: [1.0, 2.0, 3.0, 5.0, 7.0, 9.0].map(T::lit),
        }
    }
}

impl<T: Real> SaatyScale<T> {
    /// Custom mapping; must start at 1 and be strictly increasing.
    pub fn new(values: [T; 6]) -> Result<Self, AhpError> {
        if values[0] != T::one() || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AhpError::InvalidMatrix(
                "scale must start at 1 and increase strictly".into(),
            ));
        }
        Ok(SaatyScale { values })
    }

    pub fn ratio(&self, magnitude: u8) -> Option<T> {
        self.values.get(magnitude as usize).copied()
    }

    pub fn max_ratio(&self) -> T {
        self.values[5]
    }
}

/// Positive reciprocal matrix over a labelled element set, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix<T> {
    labels: Vec<String>,
    entries: Vec<T>,
}

impl<T: Real> ComparisonMatrix<T> {
    /// Builds a matrix from explicit rows, checking the reciprocal structure
    /// and that every entry lies within `[1/9, 9]`.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self, AhpError> {
        let n = labels.len();
        if n == 0 || rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(AhpError::InvalidMatrix(format!(
                "expected a {n}x{n} matrix"
            )));
        }
        let entries: Vec<T> = rows.into_iter().flatten().collect();
        let m = ComparisonMatrix { labels, entries };
        m.check(T::lit(9.0))?;
        Ok(m)
    }

    fn check(&self, max_ratio: T) -> Result<(), AhpError> {
        let n = self.order();
        let tol = T::tolerance(1e-12);
        let lo = T::one() / max_ratio;
        for i in 0..n {
            if self.get(i, i) != T::one() {
                return Err(AhpError::InvalidMatrix(format!(
                    "diagonal entry {i} is not 1"
                )));
            }
            for j in 0..n {
                let a = self.get(i, j);
                if !(a.is_finite() && a > T::zero()) {
                    return Err(AhpError::InvalidMatrix(format!(
                        "entry ({i}, {j}) is not positive"
                    )));
                }
                if a < lo * (T::one() - tol) || a > max_ratio * (T::one() + tol) {
                    return Err(AhpError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {a} outside [1/{max_ratio}, {max_ratio}]"
                    )));
                }
                if (a * self.get(j, i) - T::one()).abs() > tol {
                    return Err(AhpError::InvalidMatrix(format!(
                        "entries ({i}, {j}) and ({j}, {i}) are not reciprocal"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.order() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.order();
        &self.entries[i * n..(i + 1) * n]
    }

    /// All-ones matrix (every pair judged equally important).
    pub fn uniform(labels: Vec<String>) -> Self {
        let n = labels.len();
        ComparisonMatrix {
            labels,
            entries: vec![T::one(); n * n],
        }
    }

    fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.order())
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect()
    }

    /// Same matrix with rows and columns reordered by `perm` (new i = old perm[i]).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.order();
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                entries.push(self.get(pi, pj));
            }
        }
        ComparisonMatrix { labels, entries }
    }
}

/// Turns questionnaire judgments into a comparison matrix.
///
/// A judgment `m` on pair (left, right) favors left when negative and right
/// when positive; the favored side gets `s(|m|)` and the other side its
/// reciprocal. Judgments may be keyed in either orientation.
pub fn to_matrix<T: Real>(
    labels: &[String],
    judgments: &BTreeMap<PairKey, i8>,
    scale: &SaatyScale<T>,
) -> Result<ComparisonMatrix<T>, AhpError> {
    let n = labels.len();
    let mut m = ComparisonMatrix::uniform(labels.to_vec());
    for i in 0..n {
        for j in i + 1..n {
            let value = match judgments.get(&PairKey::new(&labels[i], &labels[j])) {
                Some(&v) => v,
                None => match judgments.get(&PairKey::new(&labels[j], &labels[i])) {
                    Some(&v) => -v,
                    None => {
                        return Err(AhpError::Incomplete {
                            left: labels[i].clone(),
                            right: labels[j].clone(),
                        })
                    }
                },
            };
            if value.unsigned_abs() > MAX_JUDGMENT as u8 {
                return Err(AhpError::JudgmentOutOfScale(value));
            }
            let s = scale
                .ratio(value.unsigned_abs())
                .ok_or(AhpError::JudgmentOutOfScale(value))?;
            let (ij, ji) = if value < 0 {
                (s, T::one() / s)
            } else if value > 0 {
                (T::one() / s, s)
            } else {
                (T::one(), T::one())
            };
            m.entries[i * n + j] = ij;
            m.entries[j * n + i] = ji;
        }
    }
    Ok(m)
}

/// Labelled non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub labels: Vec<String>,
    pub weights: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// Normalizes `raw` to unit sum.
    pub fn normalized(labels: Vec<String>, raw: Vec<T>) -> Self {
        let total: T = raw.iter().copied().sum();
        WeightVector {
            labels,
            weights: raw.into_iter().map(|w| w / total).collect(),
        }
    }

    pub fn get(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Labels ordered by descending weight (stable for ties).
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx.into_iter().map(|i| self.labels[i].as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport<T> {
    pub lambda_max: T,
    pub consistency_index: T,
    pub consistency_ratio: T,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMethod {
    /// Principal right eigenvector by power iteration.
    #[default]
    Eigenvector,
    /// Normalized row geometric means.
    GeometricMean,
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMethod::Eigenvector => "eigenvector",
            WeightMethod::GeometricMean => "geometric-mean",
        })
    }
}

impl std::str::FromStr for WeightMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eigenvector" => Ok(WeightMethod::Eigenvector),
            "geometric-mean" => Ok(WeightMethod::GeometricMean),
            other => Err(format!("unknown weight method `{other}`")),
        }
    }
}

fn consistency<T: Real>(n: usize, lambda_max: T) -> Result<ConsistencyReport<T>, AhpError> {
    if n <= 2 {
        return Ok(ConsistencyReport {
            lambda_max,
            consistency_index: T::zero(),
            consistency_ratio: T::zero(),
            n,
        });
    }
    let ri = random_index(n).ok_or(AhpError::NoRandomIndex(n))?;
    let nf = T::from_usize_lossy(n);
    let excess = lambda_max - nf;
    // Round-off alone moves lambda_max by a few ulps around n.
    let noise = T::epsilon() * T::lit(64.0) * nf;
    let ci = if excess.abs() <= noise {
        T::zero()
    } else {
        excess / (nf - T::one())
    };
    Ok(ConsistencyReport {
        lambda_max,
        consistency_index: ci,
        consistency_ratio: ci / T::lit(ri),
        n,
    })
}

fn power_iteration<T: Real>(m: &ComparisonMatrix<T>) -> Result<Vec<T>, AhpError> {
    let n = m.order();
    let tol = T::tolerance(POWER_TOLERANCE);
    let mut w = vec![T::one() / T::from_usize_lossy(n); n];
    for _ in 0..MAX_POWER_ITERATIONS {
        let mut next = m.mul_vec(&w);
        let total: T = next.iter().copied().sum();
        for x in &mut next {
            *x /= total;
        }
        let diff = next
            .iter()
            .zip(&w)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        w = next;
        if diff < tol {
            return Ok(w);
        }
    }
    Err(AhpError::NonConvergence {
        iterations: MAX_POWER_ITERATIONS,
    })
}

/// Weights and consistency for one comparison matrix.
pub fn principal_weights<T: Real>(
    matrix: &ComparisonMatrix<T>,
    method: WeightMethod,
) -> Result<(WeightVector<T>, ConsistencyReport<T>), AhpError> {
    let n = matrix.order();
    let (w, lambda) = match method {
        WeightMethod::Eigenvector => {
            let w = power_iteration(matrix)?;
            let aw = matrix.mul_vec(&w);
            let num: T = w.iter().zip(&aw).map(|(&a, &b)| a * b).sum();
            let den: T = w.iter().map(|&a| a * a).sum();
            (w, num / den)
        }
        WeightMethod::GeometricMean => {
            let inv_n = T::one() / T::from_usize_lossy(n);
            let raw: Vec<T> = (0..n)
                .map(|i| {
                    let log_sum: T = matrix.row(i).iter().map(|a| a.ln()).sum();
                    (log_sum * inv_n).exp()
                })
                .collect();
            let total: T = raw.iter().copied().sum();
            let w: Vec<T> = raw.into_iter().map(|x| x / total).collect();
            let aw = matrix.mul_vec(&w);
            let lambda = aw.iter().zip(&w).map(|(&a, &b)| a / b).sum::<T>() * inv_n;
            (w, lambda)
        }
    };
    let report = consistency(n, lambda)?;
    Ok((
        WeightVector {
            labels: matrix.labels().to_vec(),
            weights: w,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AhpOptions<T> {
    pub method: WeightMethod,
    pub scale: SaatyScale<T>,
    /// Also average the sub-category matrix CR into the response's mean CR.
    pub include_subcategory_cr: bool,
}

impl<T: Real> Default for AhpOptions<T> {
    fn default() -> Self {
        AhpOptions {
            method: WeightMethod::Eigenvector,
            scale: SaatyScale::default(),
            include_subcategory_cr: false,
        }
    }
}

/// AHP output for a single expert response.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseWeights<T> {
    pub response_id: String,
    pub scenario: String,
    pub subcategory_weights: WeightVector<T>,
    /// Global feature weights (sub-category weight × within weight).
    pub feature_weights: WeightVector<T>,
    pub subcategory_cr: T,
    /// CR of each sub-category's feature matrix, in taxonomy order.
    pub feature_crs: Vec<(String, T)>,
    pub mean_cr: T,
}

pub fn response_weights<T: Real>(
    response: &CompletedResponse,
    taxonomy: &Taxonomy,
    options: &AhpOptions<T>,
) -> Result<ResponseWeights<T>, AhpError> {
    let r = &response.response;
    let sub_labels: Vec<String> = taxonomy.subcategories().map(|s| s.code.clone()).collect();
    let sub_matrix = to_matrix(&sub_labels, &r.subcategory_judgments, &options.scale)?;
    let (sub_w, sub_cr) = principal_weights(&sub_matrix, options.method)?;

    let mut labels = Vec::new();
    let mut raw = Vec::new();
    let mut feature_crs = Vec::new();
    for (sub, &sw) in taxonomy.subcategories().zip(&sub_w.weights) {
        let f_labels: Vec<String> = sub.features.iter().map(|f| f.code.clone()).collect();
        let m = to_matrix(&f_labels, &r.feature_judgments, &options.scale)?;
        let (fw, cr) = principal_weights(&m, options.method)?;
        feature_crs.push((sub.code.clone(), cr.consistency_ratio));
        labels.extend(f_labels);
        raw.extend(fw.weights.iter().map(|&w| w * sw));
    }

    let mut crs: Vec<T> = feature_crs.iter().map(|(_, c)| *c).collect();
    if options.include_subcategory_cr {
        crs.push(sub_cr.consistency_ratio);
    }
    let mean_cr = crs.iter().copied().sum::<T>() / T::from_usize_lossy(crs.len());

    Ok(ResponseWeights {
        response_id: r.response_id.clone(),
        scenario: r.attack_scenario.clone(),
        subcategory_weights: sub_w,
        feature_weights: WeightVector::normalized(labels, raw),
        subcategory_cr: sub_cr.consistency_ratio,
        feature_crs,
        mean_cr,
    })
}

/// Averaged weights for one attack scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioWeights<T> {
    pub scenario: String,
    pub feature_weights: WeightVector<T>,
    pub subcategory_weights: WeightVector<T>,
    /// Responses that survived the CR filter, sorted by id.
    pub contributing_responses: Vec<String>,
    /// Mean CR of every input response, including dropped ones.
    pub mean_cr_per_response: BTreeMap<String, T>,
    pub cr_threshold: Option<T>,
}

impl<T: Real> ScenarioWeights<T> {
    pub fn dropped_responses(&self) -> Vec<&str> {
        let kept: BTreeSet<&str> = self
            .contributing_responses
            .iter()
            .map(String::as_str)
            .collect();
        self.mean_cr_per_response
            .keys()
            .map(String::as_str)
            .filter(|id| !kept.contains(id))
            .collect()
    }
}

fn average<T: Real>(vectors: &[&WeightVector<T>]) -> Result<WeightVector<T>, AhpError> {
    let first = vectors[0];
    if vectors.iter().any(|v| v.labels != first.labels) {
        return Err(AhpError::LabelMismatch);
    }
    let mut acc = vec![T::zero(); first.len()];
    for v in vectors {
        for (a, &w) in acc.iter_mut().zip(&v.weights) {
            *a += w;
        }
    }
    let k = T::from_usize_lossy(vectors.len());
    let mean = acc.into_iter().map(|a| a / k).collect();
    Ok(WeightVector::normalized(first.labels.clone(), mean))
}

/// Drops responses whose mean CR exceeds `cr_threshold` and averages the
/// rest component-wise. The result does not depend on input order.
pub fn aggregate<T: Real>(
    responses: &[ResponseWeights<T>],
    cr_threshold: Option<T>,
) -> Result<ScenarioWeights<T>, AhpError> {
    let scenario = match responses.first() {
        Some(r) => r.scenario.clone(),
        None => {
            return Err(AhpError::EmptyCohort {
                scenario: String::new(),
                threshold: cr_threshold.map(Real::to_f64_lossy),
            })
        }
    };
    let mut sorted: Vec<&ResponseWeights<T>> = responses.iter().collect();
    sorted.sort_by(|a, b| a.response_id.cmp(&b.response_id));
    for pair in sorted.windows(2) {
        if pair[0].response_id == pair[1].response_id {
            return Err(AhpError::DuplicateResponse(pair[0].response_id.clone()));
        }
    }
    if let Some(r) = sorted.iter().find(|r| r.scenario != scenario) {
        return Err(AhpError::MixedScenarios(scenario, r.scenario.clone()));
    }

    let mean_cr_per_response = sorted
        .iter()
        .map(|r| (r.response_id.clone(), r.mean_cr))
        .collect();
    let cohort: Vec<&ResponseWeights<T>> = sorted
        .into_iter()
        .filter(|r| cr_threshold.is_none_or(|t| r.mean_cr <= t))
        .collect();
    if cohort.is_empty() {
        return Err(AhpError::EmptyCohort {
            scenario,
            threshold: cr_threshold.map(Real::to_f64_lossy),
        });
    }

    let features: Vec<&WeightVector<T>> = cohort.iter().map(|r| &r.feature_weights).collect();
    let subs: Vec<&WeightVector<T>> = cohort.iter().map(|r| &r.subcategory_weights).collect();
    Ok(ScenarioWeights {
        scenario,
        feature_weights: average(&features)?,
        subcategory_weights: average(&subs)?,
        contributing_responses: cohort.iter().map(|r| r.response_id.clone()).collect(),
        mean_cr_per_response,
        cr_threshold,
    })
}

/// Mean pairwise cosine similarity over all unordered pairs.
pub fn agreement<T: Real>(vectors: &[&WeightVector<T>]) -> Result<T, AhpError> {
    if vectors.len() < 2 {
        return Err(AhpError::TooFewVectors(vectors.len()));
    }
    let labels = &vectors[0].labels;
    if vectors.iter().any(|v| &v.labels != labels) {
        return Err(AhpError::LabelMismatch);
    }
    let norms: Vec<T> = vectors
        .iter()
        .map(|v| v.weights.iter().map(|&w| w * w).sum::<T>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&n| n == T::zero()) {
        return Err(AhpError::ZeroNorm(i));
    }
    let mut total = T::zero();
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let dot: T = vectors[i]
                .weights
                .iter()
                .zip(&vectors[j].weights)
                .map(|(&a, &b)| a * b)
                .sum();
            total += dot / (norms[i] * norms[j]);
            pairs += 1;
        }
    }
    Ok(total / T::from_usize_lossy(pairs))
}
