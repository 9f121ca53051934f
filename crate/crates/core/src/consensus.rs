//! Two-model consensus with escalation, and the oracle human-in-the-loop
//! simulation.
//!
//! A case is auto-accepted when both models produce the same valid label and
//! escalated otherwise. The oracle simulation resolves every escalated case
//! to its gold label, which bounds what a selective-review workflow can reach.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::label::TriageLabel;
use crate::metrics::{
    self, bootstrap_statistic, full_cohort_accuracy, scores_from_cases, BootstrapConfig, Case, MetricError,
};
use crate::predictions::{GoldLabels, PredictionSet, RecordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "label", rename_all = "kebab-case")]
pub enum Verdict {
    AutoAccept(TriageLabel),
    Escalate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionReason {
    Agreement,
    Disagreement,
    InvalidOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusDecision {
    pub id: RecordId,
    pub verdict: Verdict,
    pub reason: DecisionReason,
}

impl ConsensusDecision {
    pub fn accepted(&self) -> Option<TriageLabel> {
        match self.verdict {
            Verdict::AutoAccept(l) => Some(l),
            Verdict::Escalate => None,
        }
    }
}

pub fn decide_consensus(a: &PredictionSet, b: &PredictionSet) -> Result<Vec<ConsensusDecision>, MetricError> {
    if a.entries.len() != b.entries.len() || a.entries.keys().zip(b.entries.keys()).any(|(x, y)| x != y) {
        return Err(MetricError::CaseMismatch);
    }
    Ok(a.entries
        .iter()
        .map(|(id, oa)| {
            let (verdict, reason) = match (oa.label(), b.entries[id].label()) {
                (Some(x), Some(y)) if x == y => (Verdict::AutoAccept(x), DecisionReason::Agreement),
                (Some(_), Some(_)) => (Verdict::Escalate, DecisionReason::Disagreement),
                _ => (Verdict::Escalate, DecisionReason::InvalidOutput),
            };
            ConsensusDecision { id: *id, verdict, reason }
        })
        .collect())
}

/// Per-case view used by the report and its bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Row {
    gold: TriageLabel,
    accepted: Option<TriageLabel>,
    invalid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub n: usize,
    pub escalated: usize,
    pub escalation_rate: f64,
    /// Escalations caused by a parse failure in either model.
    pub invalid_output_escalations: usize,
    pub invalid_output_rate: f64,
    pub consensus_accuracy: Option<f64>,
    pub consensus_macro_f1: Option<f64>,
    pub oracle_hitl_accuracy: f64,
    pub oracle_hitl_macro_f1: f64,
    /// Accuracy among accepted cases with the given agreed label.
    pub per_class_consensus_accuracy: [Option<f64>; 4],
    /// Accuracy among accepted cases with the given gold label.
    pub per_class_consensus_accuracy_by_gold: [Option<f64>; 4],
    pub per_class_oracle_f1: [f64; 4],
}

fn rows(gold: &GoldLabels, decisions: &[ConsensusDecision]) -> Result<Vec<Row>, MetricError> {
    decisions
        .iter()
        .map(|d| {
            Ok(Row {
                gold: *gold.get(&d.id).ok_or(MetricError::MissingGold(d.id))?,
                accepted: d.accepted(),
                invalid: d.reason == DecisionReason::InvalidOutput,
            })
        })
        .collect()
}

fn accepted_cases(rows: &[Row]) -> Vec<Case> {
    rows.iter()
        .filter_map(|r| r.accepted.map(|l| Case { gold: r.gold, pred: Some(l) }))
        .collect()
}

fn oracle_cases(rows: &[Row]) -> Vec<Case> {
    rows.iter()
        .map(|r| Case {
            gold: r.gold,
            pred: Some(r.accepted.unwrap_or(r.gold)),
        })
        .collect()
}

fn report_from_rows(rows: &[Row]) -> Result<ConsensusReport, MetricError> {
    if rows.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = rows.len();
    let escalated = rows.iter().filter(|r| r.accepted.is_none()).count();
    let invalid = rows.iter().filter(|r| r.invalid).count();
    let accepted = accepted_cases(rows);
    let consensus = scores_from_cases(&accepted).ok();
    let oracle = scores_from_cases(&oracle_cases(rows))?;

    let mut by_pred = [None; 4];
    let mut by_gold = [None; 4];
    for k in 0..TriageLabel::COUNT {
        let class_acc = |sel: &dyn Fn(&Case) -> bool| {
            let members: Vec<&Case> = accepted.iter().filter(|c| sel(c)).collect();
            (!members.is_empty())
                .then(|| members.iter().filter(|c| c.pred == Some(c.gold)).count() as f64 / members.len() as f64)
        };
        by_pred[k] = class_acc(&|c: &Case| c.pred.map(TriageLabel::index) == Some(k));
        by_gold[k] = class_acc(&|c: &Case| c.gold.index() == k);
    }

    Ok(ConsensusReport {
        n,
        escalated,
        escalation_rate: escalated as f64 / n as f64,
        invalid_output_escalations: invalid,
        invalid_output_rate: invalid as f64 / n as f64,
        consensus_accuracy: consensus.map(|s| s.accuracy),
        consensus_macro_f1: consensus.map(|s| s.macro_f1),
        oracle_hitl_accuracy: oracle.accuracy,
        oracle_hitl_macro_f1: oracle.macro_f1,
        per_class_consensus_accuracy: by_pred,
        per_class_consensus_accuracy_by_gold: by_gold,
        per_class_oracle_f1: oracle.per_class_f1,
    })
}

pub fn consensus_report(gold: &GoldLabels, decisions: &[ConsensusDecision]) -> Result<ConsensusReport, MetricError> {
    report_from_rows(&rows(gold, decisions)?)
}

/// Percentile interval attached to a pair-table column. `None` fields mean
/// the statistic was undefined on the full cohort or on every replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    fn from(point: Option<f64>, ci: Result<(f64, f64, usize), MetricError>) -> Self {
        match (point, ci) {
            (Some(p), Ok((lo, hi, _))) => Interval {
                point: Some(p),
                lo: Some(lo),
                hi: Some(hi),
            },
            (p, _) => Interval {
                point: p,
                lo: None,
                hi: None,
            },
        }
    }
}

/// One row of the model-pair table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub model_a: String,
    pub model_b: String,
    pub report: ConsensusReport,
    pub best_single_macro_f1: Interval,
    pub escalation_rate: Interval,
    pub consensus_accuracy: Interval,
    pub consensus_macro_f1: Interval,
    pub oracle_hitl_macro_f1: Interval,
    pub oracle_hitl_accuracy: Interval,
}

/// Consensus report plus bootstrap intervals for one model pair.
pub fn evaluate_pair(
    gold: &GoldLabels,
    a: &PredictionSet,
    b: &PredictionSet,
    boot: BootstrapConfig,
) -> Result<PairRow, MetricError> {
    let decisions = decide_consensus(a, b)?;
    let rows = rows(gold, &decisions)?;
    let report = report_from_rows(&rows)?;
    let cases_a = metrics::align(gold, a)?;
    let cases_b = metrics::align(gold, b)?;

    let best_single = |idx: Option<&[usize]>| -> Option<f64> {
        let pick = |cases: &[Case]| -> Option<f64> {
            match idx {
                Some(ix) => {
                    let sub: Vec<Case> = ix.iter().map(|&i| cases[i]).collect();
                    scores_from_cases(&sub).ok().map(|s| s.macro_f1)
                }
                None => scores_from_cases(cases).ok().map(|s| s.macro_f1),
            }
        };
        match (pick(&cases_a), pick(&cases_b)) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        }
    };
    let resampled = |ix: &[usize]| -> Vec<Row> { ix.iter().map(|&i| rows[i]).collect() };
    let n = rows.len();

    Ok(PairRow {
        model_a: a.config_name(),
        model_b: b.config_name(),
        report,
        best_single_macro_f1: Interval::from(best_single(None), bootstrap_statistic(n, boot, |ix| best_single(Some(ix)))),
        escalation_rate: Interval::from(
            Some(report.escalation_rate),
            bootstrap_statistic(n, boot, |ix| {
                Some(ix.iter().filter(|&&i| rows[i].accepted.is_none()).count() as f64 / ix.len() as f64)
            }),
        ),
        consensus_accuracy: Interval::from(
            report.consensus_accuracy,
            bootstrap_statistic(n, boot, |ix| scores_from_cases(&accepted_cases(&resampled(ix))).ok().map(|s| s.accuracy)),
        ),
        consensus_macro_f1: Interval::from(
            report.consensus_macro_f1,
            bootstrap_statistic(n, boot, |ix| scores_from_cases(&accepted_cases(&resampled(ix))).ok().map(|s| s.macro_f1)),
        ),
        oracle_hitl_macro_f1: Interval::from(
            Some(report.oracle_hitl_macro_f1),
            bootstrap_statistic(n, boot, |ix| scores_from_cases(&oracle_cases(&resampled(ix))).ok().map(|s| s.macro_f1)),
        ),
        oracle_hitl_accuracy: Interval::from(
            Some(report.oracle_hitl_accuracy),
            bootstrap_statistic(n, boot, |ix| full_cohort_accuracy(&oracle_cases(&resampled(ix)))),
        ),
    })
}

/// One row per pair, in input order.
pub fn pair_sweep(
    gold: &GoldLabels,
    pairs: &[(&PredictionSet, &PredictionSet)],
    boot: BootstrapConfig,
) -> Result<Vec<PairRow>, MetricError> {
    pairs.iter().map(|(a, b)| evaluate_pair(gold, a, b, boot)).collect()
}
