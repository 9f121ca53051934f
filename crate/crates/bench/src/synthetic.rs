//! Deterministic labeled corpus for smoke runs and tests.
//!
//! Each record is built from one or two phrases of its class's bank plus
//! neutral filler, so the default keyword rules put it in the bucket that
//! matches its label. Phrases avoid accidental substring hits ("had" inside
//! "shadow", "coma" inside "glaucoma" and so on).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use triage_core::rng::{self, Generator};
use triage_core::{InquiryRecord, RecordId, TriageLabel};

use crate::corpus::write_jsonl;
use crate::labels::write_labels;

const EMERGENCY: &[&str] = &[
    "My husband is having crushing chest pain right now and is sweating a lot.",
    "My mother just collapsed in the kitchen and is not responding to us.",
    "My son is having a seizure and it will not stop.",
    "My friend took too many pills tonight and is very drowsy.",
    "I think I am having a heart attack and my left arm feels numb.",
    "My daughter is choking on food and can't breathe properly.",
    "There is severe bleeding from a deep cut on my leg.",
    "My father is struggling to breathe and his lips look blue.",
];

const SELFCARE: &[&str] = &[
    "Is it normal to feel a little tired after a flu shot?",
    "I have a slight cold and a runny nose, can i take something for it?",
    "Which vitamin is good for energy in the winter?",
    "Are there home remedies for a dry cough?",
    "How long does a common cold usually last?",
    "I have a mild headache in the evenings, should i worry?",
    "What can i do at home for sore feet after running?",
    "Is it safe to drink green tea every day?",
];

const URGENT: &[&str] = &[
    "I have a high fever of 39.5 that started two days back and it keeps rising.",
    "My ankle is badly swollen and I am unable to walk on it.",
    "The cut on my hand looks infected and the redness is spreading.",
    "I found a lump in my neck that keeps getting bigger.",
    "There is blood in my urine since yesterday.",
    "My tooth abscess is very painful and I can't sleep.",
    "The pain in my lower belly is getting worse every hour.",
    "A wound on my foot is not healing and it hurts to touch.",
];

const SCHEDULE: &[&str] = &[
    "I have been having headaches on and off for months.",
    "I would like a second opinion about my test results.",
    "My blood pressure medication makes me dizzy in the morning.",
    "I am diagnosed with type 2 diabetes and want to plan a follow up.",
    "My knee has been stiff for weeks and I want to see a specialist.",
    "I need a referral for a chronic back problem.",
    "I get recurring heartburn after meals and want a check up.",
    "Can I book an appointment to review my thyroid levels?",
];

const FILLER: &[&str] = &[
    "I am a 34 year old office worker.",
    "I live with my partner and two children.",
    "I try to exercise a few times each week.",
    "My sleep is usually fine.",
    "I do not smoke and I drink very little.",
    "Please let me know what you think.",
    "Thank you for your time and advice.",
    "I would like to understand this better.",
    "Nobody else in the family is unwell.",
    "I work from home most days.",
];

const SHORT: &[&str] = &["Help me please.", "Is this bad?", "Hi doctor, quick question.", "ok"];

const REPLY: &str = "Thanks for your question. Based on what you describe, here is my advice.";
const REPLY_EMERGENCY: &str = "This needs immediate attention. Please call an ambulance now.";

/// Phrase bank for records of `label`.
pub fn phrase_bank(label: TriageLabel) -> &'static [&'static str] {
    match label {
        TriageLabel::SelfCare => SELFCARE,
        TriageLabel::ScheduleVisit => SCHEDULE,
        TriageLabel::UrgentClinicianReview => URGENT,
        TriageLabel::EmergencyReferral => EMERGENCY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    /// Records per class, in severity order.
    pub per_class: [usize; 4],
    /// Extra records too short to pass the default filter.
    pub short: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Small corpus used by the end-to-end smoke run.
    pub const SMOKE: SyntheticSpec = SyntheticSpec {
        per_class: [14, 13, 13, 16],
        short: 4,
        seed: 7,
    };

    pub fn total(&self) -> usize {
        self.per_class.iter().sum::<usize>() + self.short
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub records: Vec<InquiryRecord>,
    /// Intended label of every record, short ones included.
    pub labels: BTreeMap<RecordId, TriageLabel>,
}

fn pick<'a>(g: &mut Generator, items: &[&'a str]) -> &'a str {
    items[rng::below(g, items.len() as u64) as usize]
}

fn compose(g: &mut Generator, label: TriageLabel) -> String {
    let bank = phrase_bank(label);
    let mut parts = vec![pick(g, bank)];
    if rng::below(g, 2) == 1 {
        let second = pick(g, bank);
        if second != parts[0] {
            parts.push(second);
        }
    }
    for _ in 0..3 + rng::below(g, 6) {
        parts.push(pick(g, FILLER));
    }
    rng::shuffle(&mut parts[1..], g);
    parts.join(" ")
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    let mut g = rng::seeded(spec.seed);
    let mut plan: Vec<Option<TriageLabel>> = Vec::with_capacity(spec.total());
    for (label, &n) in TriageLabel::ALL.iter().zip(&spec.per_class) {
        plan.extend(std::iter::repeat_n(Some(*label), n));
    }
    plan.extend(std::iter::repeat_n(None, spec.short));
    rng::shuffle(&mut plan, &mut g);

    let mut records = Vec::with_capacity(plan.len());
    let mut labels = BTreeMap::new();
    for (i, slot) in plan.into_iter().enumerate() {
        let id = 1000 + i as RecordId;
        let (text, label) = match slot {
            Some(label) => (compose(&mut g, label), label),
            None => (pick(&mut g, SHORT).to_string(), TriageLabel::SelfCare),
        };
        let reply = if label == TriageLabel::EmergencyReferral { REPLY_EMERGENCY } else { REPLY };
        records.push(InquiryRecord {
            id,
            patient_text: text,
            physician_text: reply.into(),
            source_row: i as u64 + 1,
        });
        labels.insert(id, label);
    }
    SyntheticCorpus { records, labels }
}

/// Files written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct Fixture {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    pub second_annotator: PathBuf,
    pub config: PathBuf,
}

/// Writes the smoke corpus, its labels and a runnable stub-backed config
/// into `dir`. The run directory is `dir/run`.
pub fn write_fixture(dir: &Path) -> anyhow::Result<Fixture> {
    fs::create_dir_all(dir)?;
    let corpus = generate(&SyntheticSpec::SMOKE);
    let corpus_path = dir.join("corpus.jsonl");
    let labels_path = dir.join("labels.csv");
    let second_path = dir.join("second_annotator.csv");
    let config_path = dir.join("experiment.toml");
    write_jsonl(&corpus_path, &corpus.records)?;
    write_labels(&labels_path, &corpus.labels)?;
    write_labels(&second_path, &second_opinion(&corpus.labels))?;
    fs::write(&config_path, SMOKE_CONFIG)?;
    Ok(Fixture {
        corpus: corpus_path,
        labels: labels_path,
        second_annotator: second_path,
        config: config_path,
    })
}

/// Every fourth label moved one severity step, so agreement is high but not perfect.
fn second_opinion(labels: &BTreeMap<RecordId, TriageLabel>) -> BTreeMap<RecordId, TriageLabel> {
    labels
        .iter()
        .enumerate()
        .map(|(i, (id, l))| {
            let k = l.index();
            let moved = if i % 4 != 3 { k } else if k == 0 { 1 } else { k - 1 };
            (*id, TriageLabel::ALL[moved])
        })
        .collect()
}

const SMOKE_CONFIG: &str = r#"output_dir = "run"

[corpus]
path = "corpus.jsonl"

[sampling]
pool_size = 56
seed = 5
split = { silver = 24, gold = 16, fewshot = 16 }

[labels]
silver = "labels.csv"
gold = "labels.csv"
fewshot = "labels.csv"
second_annotator = "second_annotator.csv"

[baseline]
folds = 2

[[models]]
name = "stub-careful"
settings = [0, 4, 12]
backend = { kind = "stub", model_id = "careful", stub = { noise = 0.1, garbage_rate = 0.02 } }

[[models]]
name = "stub-noisy"
settings = [0, 4, 12]
backend = { kind = "stub", model_id = "noisy", stub = { noise = 0.35, garbage_rate = 0.05 } }

[evaluation]
replicates = 200
seed = 42
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use triage_core::sampler::{assign_all, Bucket, KeywordLists};
    use triage_core::{quality_filter, FilterConfig};

    fn bucket_of(label: TriageLabel) -> Bucket {
        match label {
            TriageLabel::SelfCare => Bucket::Selfcare,
            TriageLabel::ScheduleVisit => Bucket::Schedule,
            TriageLabel::UrgentClinicianReview => Bucket::Urgent,
            TriageLabel::EmergencyReferral => Bucket::Emergency,
        }
    }

    #[test]
    fn records_land_in_their_bucket() {
        let spec = SyntheticSpec {
            per_class: [300, 300, 300, 300],
            short: 0,
            seed: 3,
        };
        let c = generate(&spec);
        let kept = quality_filter(&c.records, &FilterConfig::default());
        assert_eq!(kept.kept.len(), 1200);
        for a in assign_all(&c.records, &KeywordLists::default()) {
            assert_eq!(a.bucket, bucket_of(c.labels[&a.id]), "record {}", a.id);
            assert!(!a.low_priority_emergency);
        }
    }

    #[test]
    fn short_records_are_filtered() {
        let c = generate(&SyntheticSpec::SMOKE);
        let out = quality_filter(&c.records, &FilterConfig::default());
        assert_eq!(out.excluded.len(), 4);
        assert_eq!(out.kept.len(), 56);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(&SyntheticSpec::SMOKE), generate(&SyntheticSpec::SMOKE));
    }
}
