//! Predictions produced outside this tool (fine-tuned encoders, tree models).

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use triage_core::digest::sha256_hex;
use triage_core::parse::{PredictionOutcome, StructuredPrediction};
use triage_core::predictions::ids_digest;
use triage_core::{normalize_label, Confidence, PredictionSet, PromptSetting, RecordId};

use crate::labels::{read_label_table, LabelFileError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    File(#[from] LabelFileError),
    #[error("{path}: missing predictions for {} case(s): {}", .ids.len(), fmt_ids(.ids))]
    MissingIds { path: String, ids: Vec<RecordId> },
    #[error("{path}: ids not in the evaluation split: {}", fmt_ids(.ids))]
    UnexpectedIds { path: String, ids: Vec<RecordId> },
}

fn fmt_ids(ids: &[RecordId]) -> String {
    ids.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
}

/// Reads an `id,label` file covering exactly `case_ids`.
///
/// Each raw label goes through [`normalize_label`]; labels that do not map
/// become parse failures rather than errors.
pub fn ingest_prediction_file(path: &Path, model_name: &str, case_ids: &[RecordId]) -> Result<PredictionSet, IngestError> {
    let rows = read_label_table(path)?;
    let expected: BTreeSet<RecordId> = case_ids.iter().copied().collect();
    let found: BTreeSet<RecordId> = rows.iter().map(|r| r.id).collect();
    let shown = path.display().to_string();
    let missing: Vec<RecordId> = expected.difference(&found).copied().collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingIds { path: shown, ids: missing });
    }
    let extra: Vec<RecordId> = found.difference(&expected).copied().collect();
    if !extra.is_empty() {
        return Err(IngestError::UnexpectedIds { path: shown, ids: extra });
    }

    let mut set = PredictionSet::new(model_name, PromptSetting::External);
    for r in rows {
        let outcome = match normalize_label(&r.label) {
            Ok(label) => PredictionOutcome::Valid(StructuredPrediction {
                label,
                confidence: Confidence::Unknown,
                insufficient_info: false,
                raw_text: r.label,
                leniently_parsed: false,
            }),
            Err(f) => PredictionOutcome::ParseFailure(f),
        };
        set.entries.insert(r.id, outcome);
    }
    set.gold_digest = Some(ids_digest(case_ids.iter().copied()));
    let bytes = fs::read(path).map_err(|source| LabelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    set.meta.config_digest = sha256_hex(&bytes);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use triage_core::parse::FailureReason;
    use triage_core::TriageLabel;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn canonical_file_is_all_valid() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("id,label\n");
        let labels = TriageLabel::ALL;
        for i in 0..300u64 {
            body.push_str(&format!("{i},{}\n", labels[i as usize % 4]));
        }
        let p = write(dir.path(), "p.csv", &body);
        let ids: Vec<u64> = (0..300).collect();
        let set = ingest_prediction_file(&p, "vendor", &ids).unwrap();
        assert_eq!(set.len(), 300);
        assert_eq!(set.failure_count(), 0);
    }

    #[test]
    fn non_canonical_label_is_a_failure() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.jsonl", "{\"id\":1,\"label\":\"urgent\"}\n{\"id\":2,\"label\":\"Self Care\"}\n");
        let set = ingest_prediction_file(&p, "rf", &[1, 2]).unwrap();
        match &set.entries[&1] {
            PredictionOutcome::ParseFailure(f) => assert_eq!(f.reason, FailureReason::UnmappableLabel),
            other => panic!("{other:?}"),
        }
        assert_eq!(set.label_of(2), Some(TriageLabel::SelfCare));
    }

    #[test]
    fn missing_ids_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("id,label\n");
        for i in 0..300u64 {
            if i != 17 && i != 250 {
                body.push_str(&format!("{i},self-care\n"));
            }
        }
        let p = write(dir.path(), "p.csv", &body);
        let ids: Vec<u64> = (0..300).collect();
        match ingest_prediction_file(&p, "x", &ids) {
            Err(IngestError::MissingIds { ids, .. }) => assert_eq!(ids, [17, 250]),
            other => panic!("{other:?}"),
        }
    }
}
