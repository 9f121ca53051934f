use serde::{Deserialize, Serialize};

use super::{align, Case, MetricError};
use crate::label::TriageLabel;
use crate::predictions::{GoldLabels, PredictionSet};

/// Directional error rates on the ordinal severity scale, over valid cases.
///
/// Recalls are `None` when the gold split has no case in their denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyMetrics {
    pub valid_n: u64,
    pub under_triage_rate: f64,
    pub severe_under_triage_rate: f64,
    pub over_triage_rate: f64,
    pub exact_rate: f64,
    pub urgent_or_higher_recall: Option<f64>,
    pub emergency_recall: Option<f64>,
    pub emergency_false_negatives: u64,
}

pub fn safety_from_cases(cases: &[Case]) -> Result<SafetyMetrics, MetricError> {
    let (mut n, mut under, mut severe, mut over, mut exact) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let (mut high_gold, mut high_hit) = (0u64, 0u64);
    let (mut er_gold, mut er_hit) = (0u64, 0u64);
    for c in cases {
        let Some(pred) = c.pred else { continue };
        n += 1;
        let gap = c.gold.severity().gap(pred.severity());
        match gap {
            g if g > 0 => {
                under += 1;
                if g >= 2 {
                    severe += 1;
                }
            }
            0 => exact += 1,
            _ => over += 1,
        }
        if c.gold.severity().level() >= 2 {
            high_gold += 1;
            if pred.severity().level() >= 2 {
                high_hit += 1;
            }
        }
        if c.gold == TriageLabel::EmergencyReferral {
            er_gold += 1;
            if pred == TriageLabel::EmergencyReferral {
                er_hit += 1;
            }
        }
    }
    if n == 0 {
        return Err(MetricError::NoValidCases);
    }
    let rate = |k: u64| k as f64 / n as f64;
    Ok(SafetyMetrics {
        valid_n: n,
        under_triage_rate: rate(under),
        severe_under_triage_rate: rate(severe),
        over_triage_rate: rate(over),
        exact_rate: rate(exact),
        urgent_or_higher_recall: (high_gold > 0).then(|| high_hit as f64 / high_gold as f64),
        emergency_recall: (er_gold > 0).then(|| er_hit as f64 / er_gold as f64),
        emergency_false_negatives: er_gold - er_hit,
    })
}

pub fn safety_metrics(gold: &GoldLabels, preds: &PredictionSet) -> Result<SafetyMetrics, MetricError> {
    safety_from_cases(&align(gold, preds)?)
}
