//! Prediction-set files: a header line followed by one json object per case.
//!
//! Request counts, cache hits and timestamps are left out so that replays
//! produce identical bytes; the run manifest records them instead.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use triage_core::parse::PredictionOutcome;
use triage_core::predictions::RunMeta;
use triage_core::{PredictionSet, PromptSetting, RecordId};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model_name: String,
    setting: PromptSetting,
    gold_digest: Option<String>,
    config_digest: String,
    entries: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    id: RecordId,
    #[serde(flatten)]
    outcome: PredictionOutcome,
}

#[derive(Debug, thiserror::Error)]
pub enum PredFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("header declares {declared} entries, file has {found}")]
    Count { declared: usize, found: usize },
    #[error("empty prediction file")]
    Empty,
}

pub fn write_predictions(path: &Path, set: &PredictionSet) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = Header {
        model_name: set.model_name.clone(),
        setting: set.setting,
        gold_digest: set.gold_digest.clone(),
        config_digest: set.meta.config_digest.clone(),
        entries: set.entries.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for (id, outcome) in &set.entries {
        serde_json::to_writer(
            &mut w,
            &Entry {
                id: *id,
                outcome: outcome.clone(),
            },
        )?;
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet, PredFileError> {
    let mut lines = BufReader::new(File::open(path)?).lines().enumerate();
    let (_, first) = lines.next().ok_or(PredFileError::Empty)?;
    let header: Header = serde_json::from_str(&first?).map_err(|source| PredFileError::Json { line: 1, source })?;
    let mut set = PredictionSet::new(header.model_name, header.setting);
    set.gold_digest = header.gold_digest;
    set.meta = RunMeta {
        config_digest: header.config_digest,
        ..RunMeta::default()
    };
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: Entry = serde_json::from_str(&line).map_err(|source| PredFileError::Json { line: i + 1, source })?;
        set.entries.insert(e.id, e.outcome);
    }
    if set.entries.len() != header.entries {
        return Err(PredFileError::Count {
            declared: header.entries,
            found: set.entries.len(),
        });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use triage_core::parse::{FailureReason, ParseFailure};
    use triage_core::{parse_structured_output, TriageLabel};

    #[test]
    fn round_trip_keeps_failures_and_flags() {
        let mut set = PredictionSet::from_labels("m", PromptSetting::FourShot, [(1, TriageLabel::SelfCare)]);
        let p = parse_structured_output("```json\n{\"label\":\"emergency-referral\"}\n```").unwrap();
        set.entries.insert(2, PredictionOutcome::Valid(p));
        set.entries.insert(
            3,
            PredictionOutcome::ParseFailure(ParseFailure::new("oops", FailureReason::NoObjectFound).with_note("timeout")),
        );
        set.gold_digest = Some("abc".into());
        set.meta.config_digest = "cfg".into();
        set.meta.requests = 7;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        write_predictions(&path, &set).unwrap();
        let back = read_predictions(&path).unwrap();
        set.meta.requests = 0;
        assert_eq!(back, set);
    }
}
