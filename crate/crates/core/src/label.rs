//! The four-class label space and its ordinal severity scale.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Actionable triage label. Declaration order is severity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TriageLabel {
    #[serde(rename = "self-care")]
    SelfCare,
    #[serde(rename = "schedule-visit")]
    ScheduleVisit,
    #[serde(rename = "urgent-clinician-review")]
    UrgentClinicianReview,
    #[serde(rename = "emergency-referral")]
    EmergencyReferral,
}

impl TriageLabel {
    pub const COUNT: usize = 4;

    /// All labels in severity order.
    pub const ALL: [TriageLabel; 4] = [
        TriageLabel::SelfCare,
        TriageLabel::ScheduleVisit,
        TriageLabel::UrgentClinicianReview,
        TriageLabel::EmergencyReferral,
    ];

    /// Canonical on-disk and wire spelling.
    pub const fn as_str(self) -> &'static str {
        match self {
            TriageLabel::SelfCare => "self-care",
            TriageLabel::ScheduleVisit => "schedule-visit",
            TriageLabel::UrgentClinicianReview => "urgent-clinician-review",
            TriageLabel::EmergencyReferral => "emergency-referral",
        }
    }

    pub const fn severity(self) -> Severity {
        Severity(self as u8)
    }

    /// Column/row index used by confusion matrices and weight matrices.
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<TriageLabel> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for TriageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error for strings that are not one of the four canonical spellings.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a canonical triage label")]
pub struct UnknownLabel;

impl FromStr for TriageLabel {
    type Err = UnknownLabel;

    /// Exact canonical match only; use [`crate::normalize_label`] for model output.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or(UnknownLabel)
    }
}

/// Ordinal severity level, 0 (self-care) through 3 (emergency-referral).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Severity(u8);

impl Severity {
    pub fn new(level: u8) -> Option<Severity> {
        (level <= 3).then_some(Severity(level))
    }

    pub const fn level(self) -> u8 {
        self.0
    }

    pub fn label(self) -> TriageLabel {
        TriageLabel::ALL[self.0 as usize]
    }

    /// Signed gap `self - other`.
    pub fn gap(self, other: Severity) -> i8 {
        self.0 as i8 - other.0 as i8
    }
}

impl From<TriageLabel> for Severity {
    fn from(label: TriageLabel) -> Self {
        label.severity()
    }
}

/// Self-reported model confidence. `Unknown` when the field is absent or unreadable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Medium,
    Low,
    #[default]
    Unknown,
}

impl Confidence {
    pub fn from_loose(raw: &str) -> Option<Confidence> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "high" => Some(Confidence::High),
            "medium" => Some(Confidence::Medium),
            "low" => Some(Confidence::Low),
            _ => None,
        }
    }
}
