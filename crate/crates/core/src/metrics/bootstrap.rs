use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{full_cohort_accuracy, safety_from_cases, scores_from_cases, Case, MetricError};
use crate::rng;

/// Scalar metrics that can be bootstrapped from aligned cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    MacroF1,
    Accuracy,
    UnderTriage,
    SevereUnderTriage,
    OverTriage,
    UrgentOrHigherRecall,
    EmergencyRecall,
    /// Accuracy with parse failures counted as wrong.
    FullCohortAccuracy,
}

impl Metric {
    pub fn evaluate(self, cases: &[Case]) -> Option<f64> {
        match self {
            Metric::MacroF1 => scores_from_cases(cases).ok().map(|s| s.macro_f1),
            Metric::Accuracy => scores_from_cases(cases).ok().map(|s| s.accuracy),
            Metric::UnderTriage => safety_from_cases(cases).ok().map(|s| s.under_triage_rate),
            Metric::SevereUnderTriage => safety_from_cases(cases).ok().map(|s| s.severe_under_triage_rate),
            Metric::OverTriage => safety_from_cases(cases).ok().map(|s| s.over_triage_rate),
            Metric::UrgentOrHigherRecall => safety_from_cases(cases).ok().and_then(|s| s.urgent_or_higher_recall),
            Metric::EmergencyRecall => safety_from_cases(cases).ok().and_then(|s| s.emergency_recall),
            Metric::FullCohortAccuracy => full_cohort_accuracy(cases),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 42,
        }
    }
}

/// Percentile interval around a point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    /// Replicates requested.
    pub replicates: usize,
    /// Replicates where the statistic was defined.
    pub used: usize,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Case-level percentile bootstrap of an arbitrary statistic over `n` cases.
///
/// Replicate `r` draws its indices from substream `r` of `seed`, so results
/// do not depend on evaluation order. Undefined replicates are skipped.
/// Returns `(lo, hi, used)` for the 2.5% and 97.5% percentiles.
pub fn bootstrap_statistic<F>(n: usize, cfg: BootstrapConfig, mut statistic: F) -> Result<(f64, f64, usize), MetricError>
where
    F: FnMut(&[usize]) -> Option<f64>,
{
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let mut values = Vec::with_capacity(cfg.replicates);
    let mut idx = alloc::vec![0usize; n];
    for r in 0..cfg.replicates {
        let mut g = rng::substream(cfg.seed, r as u64);
        for slot in idx.iter_mut() {
            *slot = rng::below(&mut g, n as u64) as usize;
        }
        if let Some(v) = statistic(&idx) {
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(MetricError::AllReplicatesUndefined);
    }
    values.sort_by(f64::total_cmp);
    Ok((percentile(&values, 0.025), percentile(&values, 0.975), values.len()))
}

pub fn bootstrap_ci(cases: &[Case], metric: Metric, cfg: BootstrapConfig) -> Result<BootstrapCI, MetricError> {
    let valid = cases.iter().filter(|c| c.pred.is_some()).count();
    if valid < 2 {
        return Err(MetricError::TooFewCases(valid));
    }
    let point = metric.evaluate(cases).ok_or(MetricError::NoValidCases)?;
    let mut buf = Vec::with_capacity(cases.len());
    let (lo, hi, used) = bootstrap_statistic(cases.len(), cfg, |idx| {
        buf.clear();
        buf.extend(idx.iter().map(|&i| cases[i]));
        metric.evaluate(&buf)
    })?;
    Ok(BootstrapCI {
        point,
        lo,
        hi,
        replicates: cfg.replicates,
        used,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::TriageLabel::*;

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.025), 0.1);
        assert_eq!(percentile(&v, 1.0), 4.0);
    }

    #[test]
    fn all_correct_is_degenerate() {
        let cases: Vec<Case> = [SelfCare, ScheduleVisit, EmergencyReferral, SelfCare]
            .iter()
            .map(|g| Case { gold: *g, pred: Some(*g) })
            .collect();
        let ci = bootstrap_ci(&cases, Metric::Accuracy, BootstrapConfig::default()).unwrap();
        assert_eq!((ci.lo, ci.hi, ci.point), (1.0, 1.0, 1.0));
    }

    #[test]
    fn too_few_cases() {
        let cases = [Case { gold: SelfCare, pred: Some(SelfCare) }];
        assert_eq!(
            bootstrap_ci(&cases, Metric::Accuracy, BootstrapConfig::default()),
            Err(MetricError::TooFewCases(1))
        );
    }
}
