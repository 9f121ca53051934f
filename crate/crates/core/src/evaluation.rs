//! Per-configuration metric bundles and pairwise comparisons.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::consensus::Interval;
use crate::metrics::{
    self, bootstrap_ci, mcnemar_test, paired_correctness, safety_from_cases, scores_from_cases, BootstrapConfig,
    ClassificationScores, Metric, MetricError, McNemarResult, SafetyMetrics,
};
use crate::predictions::{GoldLabels, PredictionSet, PromptSetting};

/// Everything reported for one model configuration on one split.
///
/// `scores` and `safety` are `None` when every prediction failed to parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config_name: String,
    pub model_name: String,
    pub setting: PromptSetting,
    pub n_cases: usize,
    pub valid_n: usize,
    pub parse_failures: usize,
    pub parse_fail_rate: f64,
    pub scores: Option<ClassificationScores>,
    pub safety: Option<SafetyMetrics>,
    pub macro_f1: Interval,
    pub accuracy: Interval,
    pub under_triage: Interval,
    pub severe_under_triage: Interval,
    pub over_triage: Interval,
    pub urgent_or_higher_recall: Interval,
    pub emergency_recall: Interval,
    pub full_cohort_accuracy: Option<f64>,
    pub bootstrap: BootstrapConfig,
}

fn interval(cases: &[metrics::Case], metric: Metric, boot: BootstrapConfig) -> Interval {
    let point = metric.evaluate(cases);
    match bootstrap_ci(cases, metric, boot) {
        Ok(ci) if point.is_some() => Interval {
            point,
            lo: Some(ci.lo),
            hi: Some(ci.hi),
        },
        _ => Interval {
            point,
            lo: None,
            hi: None,
        },
    }
}

pub fn evaluate_set(
    gold: &GoldLabels,
    preds: &PredictionSet,
    boot: BootstrapConfig,
) -> Result<EvaluationReport, MetricError> {
    let cases = metrics::align(gold, preds)?;
    let parse_fail_rate = metrics::parse_fail_rate(preds)?;
    let iv = |m| interval(&cases, m, boot);
    Ok(EvaluationReport {
        config_name: preds.config_name(),
        model_name: preds.model_name.clone(),
        setting: preds.setting,
        n_cases: cases.len(),
        valid_n: cases.iter().filter(|c| c.pred.is_some()).count(),
        parse_failures: preds.failure_count(),
        parse_fail_rate,
        scores: scores_from_cases(&cases).ok(),
        safety: safety_from_cases(&cases).ok(),
        macro_f1: iv(Metric::MacroF1),
        accuracy: iv(Metric::Accuracy),
        under_triage: iv(Metric::UnderTriage),
        severe_under_triage: iv(Metric::SevereUnderTriage),
        over_triage: iv(Metric::OverTriage),
        urgent_or_higher_recall: iv(Metric::UrgentOrHigherRecall),
        emergency_recall: iv(Metric::EmergencyRecall),
        full_cohort_accuracy: metrics::full_cohort_accuracy(&cases),
        bootstrap: boot,
    })
}

/// `a - b` for each headline metric; `None` when either side is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub macro_f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub under_triage: Option<f64>,
    pub severe_under_triage: Option<f64>,
    pub over_triage: Option<f64>,
    pub urgent_or_higher_recall: Option<f64>,
    pub emergency_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub config_a: String,
    pub config_b: String,
    /// Cases valid for both sets; the McNemar test runs on these.
    pub jointly_valid: usize,
    pub mcnemar: McNemarResult,
    pub deltas: MetricDeltas,
}

/// McNemar on jointly valid cases plus metric deltas.
///
/// Both sets must target the same gold split.
pub fn compare_sets(gold: &GoldLabels, a: &PredictionSet, b: &PredictionSet) -> Result<Comparison, MetricError> {
    if a.effective_gold_digest() != b.effective_gold_digest() {
        return Err(MetricError::GoldMismatch);
    }
    let (ca, cb) = paired_correctness(gold, a, b)?;
    let mcnemar = mcnemar_test(&ca, &cb)?;
    let xa = metrics::align(gold, a)?;
    let xb = metrics::align(gold, b)?;
    let delta = |m: Metric| match (m.evaluate(&xa), m.evaluate(&xb)) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    };
    Ok(Comparison {
        config_a: a.config_name(),
        config_b: b.config_name(),
        jointly_valid: ca.len(),
        mcnemar,
        deltas: MetricDeltas {
            macro_f1: delta(Metric::MacroF1),
            accuracy: delta(Metric::Accuracy),
            under_triage: delta(Metric::UnderTriage),
            severe_under_triage: delta(Metric::SevereUnderTriage),
            over_triage: delta(Metric::OverTriage),
            urgent_or_higher_recall: delta(Metric::UrgentOrHigherRecall),
            emergency_recall: delta(Metric::EmergencyRecall),
        },
    })
}
