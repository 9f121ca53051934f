use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::predictions::{GoldLabels, PredictionSet};

/// Below this many discordant pairs the exact binomial test is used.
pub const EXACT_THRESHOLD: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McNemarMethod {
    ExactBinomial,
    ContinuityCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    /// `min(b, c)` for the exact test, the corrected chi-square otherwise.
    pub statistic: f64,
    pub p_value: f64,
    pub method: McNemarMethod,
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`, summed directly.
fn binomial_half_cdf(k: u64, n: u64) -> f64 {
    let mut term = 1.0f64; // C(n, 0)
    let mut sum = 0.0f64;
    for i in 0..=k {
        if i > 0 {
            term = term * (n - i + 1) as f64 / i as f64;
        }
        sum += term;
    }
    sum * libm::pow(0.5, n as f64)
}

pub fn mcnemar_test(correct_a: &[bool], correct_b: &[bool]) -> Result<McNemarResult, MetricError> {
    if correct_a.len() != correct_b.len() {
        return Err(MetricError::LengthMismatch(correct_a.len(), correct_b.len()));
    }
    let b = correct_a.iter().zip(correct_b).filter(|(a, b)| **a && !**b).count() as u64;
    let c = correct_a.iter().zip(correct_b).filter(|(a, b)| !**a && **b).count() as u64;
    let n = b + c;
    if n < EXACT_THRESHOLD {
        let k = b.min(c);
        let p = if n == 0 { 1.0 } else { (2.0 * binomial_half_cdf(k, n)).min(1.0) };
        return Ok(McNemarResult {
            b,
            c,
            statistic: k as f64,
            p_value: p,
            method: McNemarMethod::ExactBinomial,
        });
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let clipped = diff.max(0.0);
    let statistic = clipped * clipped / n as f64;
    // Chi-square with one degree of freedom: P(X > s) = erfc(sqrt(s / 2)).
    let p_value = libm::erfc(libm::sqrt(statistic / 2.0)).min(1.0);
    Ok(McNemarResult {
        b,
        c,
        statistic,
        p_value,
        method: McNemarMethod::ContinuityCorrected,
    })
}

/// Per-case correctness of two prediction sets on the cases valid for both.
pub fn paired_correctness(
    gold: &GoldLabels,
    a: &PredictionSet,
    b: &PredictionSet,
) -> Result<(Vec<bool>, Vec<bool>), MetricError> {
    if a.entries.len() != b.entries.len() || a.entries.keys().zip(b.entries.keys()).any(|(x, y)| x != y) {
        return Err(MetricError::CaseMismatch);
    }
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    for (id, oa) in &a.entries {
        let g = *gold.get(id).ok_or(MetricError::MissingGold(*id))?;
        if let (Some(la), Some(lb)) = (oa.label(), b.entries[id].label()) {
            ca.push(la == g);
            cb.push(lb == g);
        }
    }
    Ok((ca, cb))
}
