//! Keyword lists driving emergency enrichment and bucket assignment.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const STRONG_EMERGENCY: &[&str] = &[
    "can't breathe", "cannot breathe", "can not breathe", "struggling to breathe",
    "gasping for air", "not breathing", "stopped breathing", "just collapsed",
    "just passed out", "just fainted", "unresponsive", "won't wake up", "not responding",
    "having a seizure", "just had a seizure", "convulsing", "kill myself", "suicide",
    "want to die", "end my life", "overdose", "overdosed", "took too many pills", "choking",
    "can't swallow", "bleeding won't stop", "bleeding heavily", "severe bleeding",
    "heart attack", "crushing chest pain",
];

const MODERATE_EMERGENCY: &[&str] = &[
    "chest pain", "difficulty breathing", "shortness of breath", "unconscious", "collapsed",
    "seizure", "passed out", "heavy bleeding", "stroke", "anaphylaxis", "coma", "can't move",
    "paralyzed", "severe allergic",
];

const PAST_TENSE: &[&str] = &[
    "had", "was", "ago", "last year", "last month", "last week", "few months ago", "years ago",
    "used to", "history of", "previously", "in the past", "recovered", "went to er",
    "went to the hospital", "was diagnosed",
];

const DOCTOR_ESCALATION: &[&str] = &[
    "go to er", "go to the er", "emergency room", "call 911", "call emergency",
    "go to hospital immediately", "seek immediate", "life-threatening", "go to the nearest",
    "immediately go", "rush to", "don't wait", "call an ambulance", "needs immediate attention",
];

const SELFCARE: &[&str] = &[
    "is this normal", "is it normal", "should i worry", "home remedy", "home remedies",
    "over the counter", "otc", "mild", "minor", "slight cold", "common cold", "vitamin",
    "nutrition", "diet", "supplement", "how long does", "will it go away",
    "go away on its own", "is it safe to", "can i take", "what can i do at home",
];

const SELFCARE_EXCLUDERS: &[&str] = &[
    "severe", "worst", "unbearable", "excruciating", "emergency", "can't breathe",
    "chest pain", "bleeding", "unconscious", "getting worse", "worsening", "spreading",
];

const URGENT: &[&str] = &[
    "getting worse", "worsening", "severe pain", "intense pain", "high fever", "blood in",
    "infection", "infected", "swelling", "swollen", "pus", "abscess", "lump", "can't sleep",
    "unable to eat", "unable to walk", "spreading", "excruciating", "unbearable",
    "not healing", "keeps coming back",
];

const SCHEDULE: &[&str] = &[
    "for weeks", "for months", "persistent", "recurring", "follow up", "follow-up",
    "medication", "prescription", "chronic", "diagnosed with", "specialist", "referral",
    "second opinion", "test results", "lab results", "been having", "for a while",
    "on and off", "appointment", "check up", "check-up",
];

/// Lowercase phrase lists, one per category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLists {
    pub strong_emergency: Vec<String>,
    pub moderate_emergency: Vec<String>,
    pub past_tense: Vec<String>,
    pub doctor_escalation: Vec<String>,
    pub selfcare: Vec<String>,
    pub selfcare_excluders: Vec<String>,
    pub urgent: Vec<String>,
    pub schedule: Vec<String>,
}

fn owned(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for KeywordLists {
    fn default() -> Self {
        Self {
            strong_emergency: owned(STRONG_EMERGENCY),
            moderate_emergency: owned(MODERATE_EMERGENCY),
            past_tense: owned(PAST_TENSE),
            doctor_escalation: owned(DOCTOR_ESCALATION),
            selfcare: owned(SELFCARE),
            selfcare_excluders: owned(SELFCARE_EXCLUDERS),
            urgent: owned(URGENT),
            schedule: owned(SCHEDULE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeywordError {
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: phrase outside of any section")]
    NoSection { line: usize },
    #[error("section `{0}` is empty")]
    EmptySection(String),
}

pub const SECTION_NAMES: [&str; 8] = [
    "strong_emergency",
    "moderate_emergency",
    "past_tense",
    "doctor_escalation",
    "selfcare",
    "selfcare_excluders",
    "urgent",
    "schedule",
];

impl KeywordLists {
    fn section_mut(&mut self, name: &str) -> Option<&mut Vec<String>> {
        Some(match name {
            "strong_emergency" => &mut self.strong_emergency,
            "moderate_emergency" => &mut self.moderate_emergency,
            "past_tense" => &mut self.past_tense,
            "doctor_escalation" => &mut self.doctor_escalation,
            "selfcare" => &mut self.selfcare,
            "selfcare_excluders" => &mut self.selfcare_excluders,
            "urgent" => &mut self.urgent,
            "schedule" => &mut self.schedule,
            _ => return None,
        })
    }

    /// Applies an override file on top of the defaults.
    ///
    /// Format: `[section]` headers followed by one phrase per line. Blank lines
    /// and `#` comments are ignored. A section that appears replaces the
    /// default list for that category; absent sections keep their defaults.
    /// Phrases are lowercased.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, KeywordError> {
        let mut current: Option<String> = None;
        let mut seen: Vec<String> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                let list = self.section_mut(&name).ok_or_else(|| KeywordError::UnknownSection {
                    line: line_no,
                    name: name.clone(),
                })?;
                list.clear();
                seen.push(name.clone());
                current = Some(name);
                continue;
            }
            let name = current.as_deref().ok_or(KeywordError::NoSection { line: line_no })?;
            let list = self.section_mut(name).expect("section validated at header");
            list.push(trimmed.to_lowercase());
        }
        for name in seen {
            if self.section_mut(&name).is_some_and(|l| l.is_empty()) {
                return Err(KeywordError::EmptySection(name));
            }
        }
        Ok(self)
    }

    /// Renders the lists in override-file format.
    pub fn to_override_text(&self) -> String {
        let mut out = String::new();
        let mut this = self.clone();
        for name in SECTION_NAMES {
            out.push('[');
            out.push_str(name);
            out.push_str("]\n");
            for phrase in this.section_mut(name).expect("known section").iter() {
                out.push_str(phrase);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}
