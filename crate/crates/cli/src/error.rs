use std::fmt;

use dscore::ahp::AhpError;
use dscore::model::ModelError;
use dscore::responses::ResponseError;
use dscore::scoring::ScoringError;
use dscore::stats::StatsError;
use dscore::taxonomy::TaxonomyError;
use dscore::traffic::TrafficError;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or mismatched input (exit 1).
    Input(String),
    /// A numeric routine failed (exit 2).
    Numeric(String),
    /// Inputs are valid but a policy forbids producing a result (exit 3).
    Policy(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Policy(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Policy(m) => write!(f, "refused: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input(m: impl fmt::Display) -> CliError {
    CliError::Input(m.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        input(e)
    }
}

impl From<TaxonomyError> for CliError {
    fn from(e: TaxonomyError) -> Self {
        input(e)
    }
}

impl From<ResponseError> for CliError {
    fn from(e: ResponseError) -> Self {
        input(e)
    }
}

impl From<TrafficError> for CliError {
    fn from(e: TrafficError) -> Self {
        input(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        input(e)
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::InsufficientProfile { .. } => CliError::Policy(e.to_string()),
            ScoringError::Domain(_) => CliError::Numeric(e.to_string()),
            _ => input(e),
        }
    }
}

impl From<AhpError> for CliError {
    fn from(e: AhpError) -> Self {
        match e {
            AhpError::NonConvergence { .. }
            | AhpError::ZeroNorm(_)
            | AhpError::NoRandomIndex(_) => CliError::Numeric(e.to_string()),
            AhpError::EmptyCohort {
                threshold: Some(_), ..
            } => CliError::Policy(e.to_string()),
            _ => input(e),
        }
    }
}
