//! Prediction sets: one model configuration's outcomes over one split.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::label::TriageLabel;
use crate::parse::PredictionOutcome;

pub type RecordId = u64;

/// Gold (or silver) labels keyed by record id.
pub type GoldLabels = BTreeMap<RecordId, TriageLabel>;

/// Number of in-context demonstrations, or a non-prompted source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptSetting {
    ZeroShot,
    FourShot,
    TwelveShot,
    /// Predictions produced outside the prompting path (native baseline or ingested file).
    External,
}

impl PromptSetting {
    pub fn from_shots(shots: usize) -> Option<PromptSetting> {
        match shots {
            0 => Some(PromptSetting::ZeroShot),
            4 => Some(PromptSetting::FourShot),
            12 => Some(PromptSetting::TwelveShot),
            _ => None,
        }
    }

    pub fn shots(self) -> Option<usize> {
        match self {
            PromptSetting::ZeroShot => Some(0),
            PromptSetting::FourShot => Some(4),
            PromptSetting::TwelveShot => Some(12),
            PromptSetting::External => None,
        }
    }

    /// Demonstrations per class.
    pub fn per_class(self) -> Option<usize> {
        self.shots().map(|s| s / TriageLabel::COUNT)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            PromptSetting::ZeroShot => "0-shot",
            PromptSetting::FourShot => "4-shot",
            PromptSetting::TwelveShot => "12-shot",
            PromptSetting::External => "external",
        }
    }
}

impl fmt::Display for PromptSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Run bookkeeping that varies between otherwise identical runs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_digest: String,
    pub requests: u64,
    pub cache_hits: u64,
    pub started_unix: Option<u64>,
    pub finished_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model_name: String,
    pub setting: PromptSetting,
    /// Exactly one entry per evaluated case, failures included.
    pub entries: BTreeMap<RecordId, PredictionOutcome>,
    /// Digest of the case-id list the set was produced for; see [`ids_digest`].
    #[serde(default)]
    pub gold_digest: Option<String>,
    #[serde(default)]
    pub meta: RunMeta,
}

/// Digest of a sorted id list, used to check that two sets target the same split.
pub fn ids_digest(ids: impl IntoIterator<Item = RecordId>) -> String {
    let mut ids: Vec<RecordId> = ids.into_iter().collect();
    ids.sort_unstable();
    let text: Vec<String> = ids.iter().map(|i| alloc::format!("{i}")).collect();
    crate::digest::sha256_hex(text.join("\n").as_bytes())
}

impl PredictionSet {
    pub fn new(model_name: impl Into<String>, setting: PromptSetting) -> Self {
        Self {
            model_name: model_name.into(),
            setting,
            entries: BTreeMap::new(),
            gold_digest: None,
            meta: RunMeta::default(),
        }
    }

    /// `model_name/setting`, the configuration key used in reports.
    pub fn config_name(&self) -> String {
        match self.setting {
            PromptSetting::External => self.model_name.clone(),
            s => alloc::format!("{}/{}", self.model_name, s),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_of(&self, id: RecordId) -> Option<TriageLabel> {
        self.entries.get(&id).and_then(PredictionOutcome::label)
    }

    pub fn failure_count(&self) -> usize {
        self.entries.values().filter(|o| !o.is_valid()).count()
    }

    /// The recorded gold digest, or one derived from the entry ids.
    pub fn effective_gold_digest(&self) -> String {
        self.gold_digest
            .clone()
            .unwrap_or_else(|| ids_digest(self.entries.keys().copied()))
    }

    pub fn ids(&self) -> Vec<RecordId> {
        self.entries.keys().copied().collect()
    }

    /// Builds a set of clean predictions from plain labels.
    pub fn from_labels(
        model_name: impl Into<String>,
        setting: PromptSetting,
        labels: impl IntoIterator<Item = (RecordId, TriageLabel)>,
    ) -> Self {
        let mut set = Self::new(model_name, setting);
        for (id, label) in labels {
            set.entries.insert(id, PredictionOutcome::from_label(label));
        }
        set
    }
}
