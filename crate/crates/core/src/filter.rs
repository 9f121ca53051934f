//! Corpus records and the length-based quality filter.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::predictions::RecordId;

/// One patient inquiry with its physician reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InquiryRecord {
    pub id: RecordId,
    /// Byte-exact copy of the input text.
    pub patient_text: String,
    /// Used only for emergency enrichment, never as model input. May be empty.
    #[serde(default)]
    pub physician_text: String,
    #[serde(default)]
    pub source_row: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub min_chars: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_tokens: 20,
            max_tokens: 500,
            min_chars: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilterConfigError {
    #[error("min_tokens must be at least 1")]
    MinTokens,
    #[error("max_tokens ({max}) must exceed min_tokens ({min})")]
    MaxTokens { min: usize, max: usize },
    #[error("min_chars must be at least 1")]
    MinChars,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        if self.min_tokens < 1 {
            return Err(FilterConfigError::MinTokens);
        }
        if self.max_tokens <= self.min_tokens {
            return Err(FilterConfigError::MaxTokens {
                min: self.min_tokens,
                max: self.max_tokens,
            });
        }
        if self.min_chars < 1 {
            return Err(FilterConfigError::MinChars);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    TooShortTokens,
    TooLongTokens,
    TooFewChars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: RecordId,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<InquiryRecord>,
    pub excluded: Vec<Exclusion>,
}

/// Whitespace-delimited token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Reason a text fails the filter, checked in fixed precedence order.
pub fn exclusion_reason(text: &str, cfg: &FilterConfig) -> Option<ExclusionReason> {
    let tokens = token_count(text);
    if tokens < cfg.min_tokens {
        Some(ExclusionReason::TooShortTokens)
    } else if tokens > cfg.max_tokens {
        Some(ExclusionReason::TooLongTokens)
    } else if text.chars().count() < cfg.min_chars {
        Some(ExclusionReason::TooFewChars)
    } else {
        None
    }
}

pub fn quality_filter(records: &[InquiryRecord], cfg: &FilterConfig) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for record in records {
        match exclusion_reason(&record.patient_text, cfg) {
            Some(reason) => outcome.excluded.push(Exclusion { id: record.id, reason }),
            None => outcome.kept.push(record.clone()),
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn words(n: usize) -> String {
        vec!["word"; n].join(" ")
    }

    fn rec(id: u64, text: &str) -> InquiryRecord {
        InquiryRecord {
            id,
            patient_text: text.to_string(),
            physician_text: String::new(),
            source_row: id,
        }
    }

    #[test]
    fn token_boundaries() {
        let cfg = FilterConfig::default();
        assert_eq!(exclusion_reason(&words(19), &cfg), Some(ExclusionReason::TooShortTokens));
        assert_eq!(exclusion_reason(&words(20), &cfg), None);
        assert_eq!(exclusion_reason(&words(500), &cfg), None);
        assert_eq!(exclusion_reason(&words(501), &cfg), Some(ExclusionReason::TooLongTokens));
    }

    #[test]
    fn char_boundary_with_small_token_floor() {
        let cfg = FilterConfig {
            min_tokens: 1,
            ..FilterConfig::default()
        };
        assert_eq!(exclusion_reason("a b c d e", &cfg), Some(ExclusionReason::TooFewChars));
        assert_eq!(exclusion_reason("a b c d e ", &cfg), None);
        // Unicode scalars, not bytes: 9 scalars, 18 bytes.
        assert_eq!(exclusion_reason("ééééééééé", &cfg), Some(ExclusionReason::TooFewChars));
    }

    #[test]
    fn tokens_checked_before_chars() {
        let cfg = FilterConfig::default();
        assert_eq!(exclusion_reason("hi", &cfg), Some(ExclusionReason::TooShortTokens));
    }

    #[test]
    fn outcome_partitions_input() {
        let records = vec![rec(1, &words(3)), rec(2, &words(25)), rec(3, &words(600))];
        let out = quality_filter(&records, &FilterConfig::default());
        assert_eq!(out.kept.len() + out.excluded.len(), records.len());
        assert_eq!(out.kept[0].id, 2);
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            min_tokens: 10,
            max_tokens: 10,
            min_chars: 1,
        };
        assert!(bad.validate().is_err());
    }
}
