//! Scalar evaluation metrics.
//!
//! Parse failures are excluded from confusion counts and safety metrics but
//! stay in the parse-fail denominator and are resampled with their cases in
//! the bootstrap.

mod bootstrap;
mod confusion;
mod kappa;
mod mcnemar;
mod safety;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::label::TriageLabel;
use crate::predictions::{GoldLabels, PredictionSet, RecordId};

pub use bootstrap::{bootstrap_ci, bootstrap_statistic, percentile, BootstrapCI, BootstrapConfig, Metric};
pub use confusion::{confusion_and_f1, scores_from_cases, ClassificationScores, ConfusionMatrix};
pub use kappa::cohens_kappa;
pub use mcnemar::{mcnemar_test, paired_correctness, McNemarMethod, McNemarResult, EXACT_THRESHOLD};
pub use safety::{safety_from_cases, safety_metrics, SafetyMetrics};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("no valid predictions to score")]
    NoValidCases,
    #[error("case {0} has a prediction but no gold label")]
    MissingGold(RecordId),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("bootstrap needs at least 2 valid cases, got {0}")]
    TooFewCases(usize),
    #[error("every bootstrap replicate was undefined")]
    AllReplicatesUndefined,
    #[error("prediction sets cover different case ids")]
    CaseMismatch,
    #[error("prediction sets were produced for different gold splits")]
    GoldMismatch,
}

/// One evaluated case: gold label and the prediction, `None` for a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub gold: TriageLabel,
    pub pred: Option<TriageLabel>,
}

/// Joins predictions to gold labels in id order.
pub fn align(gold: &GoldLabels, preds: &PredictionSet) -> Result<Vec<Case>, MetricError> {
    preds
        .entries
        .iter()
        .map(|(id, outcome)| {
            let g = gold.get(id).ok_or(MetricError::MissingGold(*id))?;
            Ok(Case {
                gold: *g,
                pred: outcome.label(),
            })
        })
        .collect()
}

/// Failures over all entries (not over valid entries).
pub fn parse_fail_rate(preds: &PredictionSet) -> Result<f64, MetricError> {
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(preds.failure_count() as f64 / preds.len() as f64)
}

/// Accuracy over all cases with failures counted as incorrect.
pub fn full_cohort_accuracy(cases: &[Case]) -> Option<f64> {
    if cases.is_empty() {
        return None;
    }
    let correct = cases.iter().filter(|c| c.pred == Some(c.gold)).count();
    Some(correct as f64 / cases.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{FailureReason, ParseFailure, PredictionOutcome};
    use crate::predictions::PromptSetting;

    #[test]
    fn parse_fail_rate_arithmetic() {
        let mut set = PredictionSet::from_labels("m", PromptSetting::ZeroShot, (0..300).map(|i| (i, TriageLabel::SelfCare)));
        assert_eq!(parse_fail_rate(&set).unwrap(), 0.0);
        for id in 0..8 {
            set.entries.insert(
                id,
                PredictionOutcome::ParseFailure(ParseFailure::new("??", FailureReason::NoObjectFound)),
            );
        }
        let rate = parse_fail_rate(&set).unwrap();
        assert_eq!(rate, 8.0 / 300.0);
        assert!((rate - 0.0267).abs() < 5e-5);
        for id in 0..300 {
            set.entries.insert(
                id,
                PredictionOutcome::ParseFailure(ParseFailure::new("??", FailureReason::NoObjectFound)),
            );
        }
        assert_eq!(parse_fail_rate(&set).unwrap(), 1.0);
        assert_eq!(parse_fail_rate(&PredictionSet::new("m", PromptSetting::ZeroShot)), Err(MetricError::Empty));
    }

    #[test]
    fn align_requires_gold() {
        let set = PredictionSet::from_labels("m", PromptSetting::ZeroShot, [(5, TriageLabel::SelfCare)]);
        assert_eq!(align(&GoldLabels::new(), &set), Err(MetricError::MissingGold(5)));
    }
}
