//! D-Score toolkit: expert-weighted detectability scores for IoT attack
//! scenarios.
//!
//! The pipeline has two phases. Expert questionnaire responses are turned
//! into per-scenario feature weights with the analytic hierarchy process
//! ([`ahp`]), then device profiles built from spec sheets and flow records
//! ([`traffic`]) are normalized and scored against those weights
//! ([`scoring`]). [`stats`] holds the traffic-predictability statistics.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common cases.

pub mod ahp;
pub mod model;
pub mod responses;
pub mod scalar;
pub mod scoring;
pub mod stats;
pub mod taxonomy;
pub mod traffic;

pub use scalar::Real;

/// Version string written into every persisted artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub type ComparisonMatrixF64 = ahp::ComparisonMatrix<f64>;
pub type ComparisonMatrixF32 = ahp::ComparisonMatrix<f32>;
pub type WeightVectorF64 = ahp::WeightVector<f64>;
pub type WeightVectorF32 = ahp::WeightVector<f32>;
pub type ResponseWeightsF64 = ahp::ResponseWeights<f64>;
pub type ResponseWeightsF32 = ahp::ResponseWeights<f32>;
pub type ScenarioWeightsF64 = ahp::ScenarioWeights<f64>;
pub type ScenarioWeightsF32 = ahp::ScenarioWeights<f32>;
pub type NormalizationParamsF64 = scoring::NormalizationParams<f64>;
pub type NormalizationParamsF32 = scoring::NormalizationParams<f32>;
pub type ScoreCardF64 = scoring::ScoreCard<f64>;
pub type ScoreCardF32 = scoring::ScoreCard<f32>;
pub type TestResultF64 = stats::TestResult<f64>;
pub type TestResultF32 = stats::TestResult<f32>;
pub type HurstEstimateF64 = stats::HurstEstimate<f64>;
pub type HurstEstimateF32 = stats::HurstEstimate<f32>;
