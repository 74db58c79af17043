//! Evaluation metrics: legacy command/parameter accuracy, CSSS and APCS with
//! per-component breakdown, token-type F1 and report aggregation.

mod csss;
mod f1;
mod legacy;
mod report;

pub use csss::{apcs, apcs_from_score, csss, Component, ComponentScores, CsssBreakdown};
pub use f1::{f1_types, sequence_token_types, TypeConfusion};
pub use legacy::{acc_cmd, acc_param, legacy_commands, CommandKind, LegacyCommand, ParamAccuracy};
pub use report::{aggregate_report, median, score_pair, unparseable_row, BinSummary, EvalReport, EvalRow};

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("invalid scoring config: {0}")]
    InvalidConfig(&'static str),
    #[error("no models to aggregate")]
    EmptyEvaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    /// Decay rate of `S(p̂, p) = exp(-k‖p̂ - p‖)`.
    pub k: f64,
    /// Strictly ascending APCS thresholds in `(0, 1)`.
    pub thresholds: Vec<f64>,
    /// ACC_param tolerance in quantization bins.
    pub eta: u16,
    /// Zero the extrusion score on a boolean/extent mismatch instead of
    /// embedding the categoricals in the norm.
    pub categorical_gate: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            thresholds: (1..20).map(|i| i as f64 / 20.0).collect(),
            eta: 3,
            categorical_gate: false,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(MetricsError::InvalidConfig("k must be positive"));
        }
        if self.thresholds.is_empty() {
            return Err(MetricsError::InvalidConfig("thresholds must not be empty"));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(MetricsError::InvalidConfig("thresholds must lie in (0, 1)"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::InvalidConfig("thresholds must be strictly ascending"));
        }
        Ok(())
    }
}
