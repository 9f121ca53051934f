//! Offline backend: keyword rules over the query text, with optional
//! hash-driven label noise and garbage output.

use serde::{Deserialize, Serialize};
use triage_core::digest::sha256_parts;
use triage_core::prompt::RenderedPrompt;
use triage_core::sampler::{assign_bucket, emergency_score, Bucket, KeywordLists};
use triage_core::{InquiryRecord, TriageLabel};

use super::{AttemptError, Backend};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubOptions {
    /// Probability of replacing the rule label with a hash-chosen one.
    pub noise: f64,
    /// Probability of answering with unparseable text.
    pub garbage_rate: f64,
}

impl StubOptions {
    pub fn validate(&self) -> Result<(), &'static str> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if ok(self.noise) && ok(self.garbage_rate) {
            Ok(())
        } else {
            Err("stub probabilities must lie in [0, 1]")
        }
    }
}

pub const GARBAGE: &str = "I am not able to classify this message.";

pub struct StubBackend {
    salt: String,
    options: StubOptions,
    keywords: KeywordLists,
}

impl StubBackend {
    pub fn new(salt: &str, options: StubOptions) -> Self {
        Self {
            salt: salt.to_string(),
            options,
            keywords: KeywordLists::default(),
        }
    }

    /// The label the keyword rules give a message.
    pub fn rule_label(&self, message: &str) -> TriageLabel {
        let record = InquiryRecord {
            id: 0,
            patient_text: message.to_string(),
            physician_text: String::new(),
            source_row: 0,
        };
        let score = emergency_score(&record, &self.keywords);
        match assign_bucket(&record, &score, &self.keywords).bucket {
            Bucket::Emergency => TriageLabel::EmergencyReferral,
            Bucket::Urgent => TriageLabel::UrgentClinicianReview,
            Bucket::Selfcare => TriageLabel::SelfCare,
            Bucket::Schedule | Bucket::Unassigned => TriageLabel::ScheduleVisit,
        }
    }
}

fn unit(bytes: &[u8]) -> f64 {
    let mut b = [0u8; 8];
    b.copy_from_slice(&bytes[..8]);
    (u64::from_be_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
}

impl Backend for StubBackend {
    fn send(&self, prompt: &RenderedPrompt) -> Result<String, AttemptError> {
        let bytes = sha256_parts(&[self.salt.as_bytes(), prompt.full_text().as_bytes()]);
        if unit(&bytes[0..8]) < self.options.garbage_rate {
            return Ok(GARBAGE.to_string());
        }
        let mut label = self.rule_label(prompt.query());
        if unit(&bytes[8..16]) < self.options.noise {
            label = TriageLabel::from_index(usize::from(bytes[16]) % TriageLabel::COUNT).expect("index in range");
        }
        let confidence = ["high", "medium", "low"][usize::from(bytes[17]) % 3];
        Ok(format!(
            "{{\"label\": \"{label}\", \"confidence\": \"{confidence}\", \"insufficient_info\": false}}"
        ))
    }
}
