use serde::{Deserialize, Serialize};

use super::{align, Case, MetricError};
use crate::label::TriageLabel;
use crate::predictions::{GoldLabels, PredictionSet};

/// Rows are gold, columns are predictions, both in severity order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
    pub valid_n: u64,
}

impl ConfusionMatrix {
    pub fn from_cases(cases: &[Case]) -> Self {
        let mut m = ConfusionMatrix::default();
        for c in cases {
            if let Some(p) = c.pred {
                m.counts[c.gold.index()][p.index()] += 1;
                m.valid_n += 1;
            }
        }
        m
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    pub fn predicted(&self, class: usize) -> u64 {
        (0..4).map(|g| self.counts[g][class]).sum()
    }

    pub fn actual(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..4).map(|k| self.counts[k][k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub confusion: ConfusionMatrix,
    pub precision: [f64; 4],
    pub recall: [f64; 4],
    pub per_class_f1: [f64; 4],
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores over valid cases. Zero denominators give 0; macro-F1 always
/// averages all four classes.
pub fn scores_from_cases(cases: &[Case]) -> Result<ClassificationScores, MetricError> {
    let confusion = ConfusionMatrix::from_cases(cases);
    if confusion.valid_n == 0 {
        return Err(MetricError::NoValidCases);
    }
    let mut precision = [0.0; 4];
    let mut recall = [0.0; 4];
    let mut f1 = [0.0; 4];
    for k in 0..TriageLabel::COUNT {
        let tp = confusion.true_positives(k);
        precision[k] = ratio(tp, confusion.predicted(k));
        recall[k] = ratio(tp, confusion.actual(k));
        // 2PR/(P+R) == 2TP/(2TP+FP+FN); the count form avoids rounding drift.
        f1[k] = ratio(2 * tp, confusion.predicted(k) + confusion.actual(k));
    }
    Ok(ClassificationScores {
        confusion,
        precision,
        recall,
        per_class_f1: f1,
        macro_f1: f1.iter().sum::<f64>() / TriageLabel::COUNT as f64,
        accuracy: ratio(confusion.correct(), confusion.valid_n),
    })
}

pub fn confusion_and_f1(gold: &GoldLabels, preds: &PredictionSet) -> Result<ClassificationScores, MetricError> {
    scores_from_cases(&align(gold, preds)?)
}
