//! Corpus loading (json-lines or csv) and the filter report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use triage_core::filter::Exclusion;
use triage_core::{ExclusionReason, FilterConfig, FilterOutcome, InquiryRecord, RecordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    JsonLines,
    Csv,
}

impl CorpusFormat {
    /// `.csv` is csv; anything else is json-lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::JsonLines,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json-lines" | "jsonl" => Ok(CorpusFormat::JsonLines),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format {other:?} (expected json-lines or csv)")),
        }
    }
}

/// Key or column names in the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusColumns {
    /// Without an id column, ids are the zero-based row index.
    pub id: Option<String>,
    pub patient: String,
    /// Missing physician text reads as empty.
    pub physician: String,
}

impl Default for CorpusColumns {
    fn default() -> Self {
        Self {
            id: Some("id".into()),
            patient: "patient".into(),
            physician: "physician".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: u64, id: RecordId },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat, columns: &CorpusColumns) -> Result<Vec<InquiryRecord>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_corpus(BufReader::new(file), format, columns)
}

/// Parses a corpus from any reader. Row numbers in errors are 1-based data rows.
pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat, columns: &CorpusColumns) -> Result<Vec<InquiryRecord>, CorpusError> {
    let records = match format {
        CorpusFormat::JsonLines => read_jsonl(reader, columns)?,
        CorpusFormat::Csv => read_csv(reader, columns)?,
    };
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert(r.id) {
            return Err(CorpusError::DuplicateId {
                row: r.source_row + 1,
                id: r.id,
            });
        }
    }
    Ok(records)
}

fn parse_id(value: &Value, row: u64) -> Result<RecordId, CorpusError> {
    let bad = || CorpusError::Malformed {
        row,
        message: format!("id must be a non-negative integer, got {value}"),
    };
    match value {
        Value::Number(n) => n.as_u64().ok_or_else(bad),
        Value::String(s) => s.trim().parse().map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn read_jsonl<R: Read>(reader: R, columns: &CorpusColumns) -> Result<Vec<InquiryRecord>, CorpusError> {
    let mut out = Vec::new();
    for (line_no, line) in BufReader::new(reader).lines().enumerate() {
        let row = line_no as u64 + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, Value> = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let text = |key: &str, required: bool| -> Result<String, CorpusError> {
            match obj.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Null) | None if !required => Ok(String::new()),
                None => Err(CorpusError::MissingColumn(key.to_string())),
                Some(other) => Err(CorpusError::Malformed {
                    row,
                    message: format!("{key} must be a string, got {other}"),
                }),
            }
        };
        let patient_text = text(&columns.patient, true)?;
        let physician_text = text(&columns.physician, false)?;
        let source_row = out.len() as u64;
        let id = match columns.id.as_deref().and_then(|k| obj.get(k)) {
            Some(v) => parse_id(v, row)?,
            None => source_row,
        };
        out.push(InquiryRecord {
            id,
            patient_text,
            physician_text,
            source_row,
        });
    }
    Ok(out)
}

fn read_csv<R: Read>(reader: R, columns: &CorpusColumns) -> Result<Vec<InquiryRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Malformed {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let patient = find(&columns.patient).ok_or_else(|| CorpusError::MissingColumn(columns.patient.clone()))?;
    let physician = find(&columns.physician);
    let id_col = columns.id.as_deref().and_then(find);

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 1;
        let rec = rec.map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let field = |col: usize| {
            rec.get(col).map(str::to_string).ok_or_else(|| CorpusError::Malformed {
                row,
                message: format!("expected at least {} fields, found {}", col + 1, rec.len()),
            })
        };
        let source_row = i as u64;
        let id = match id_col {
            Some(c) => parse_id(&Value::String(field(c)?), row)?,
            None => source_row,
        };
        out.push(InquiryRecord {
            id,
            patient_text: field(patient)?,
            physician_text: physician.map(field).transpose()?.unwrap_or_default(),
            source_row,
        });
    }
    Ok(out)
}

/// Canonical json-lines form: `id`, `patient`, `physician`, `source_row`.
pub fn write_jsonl(path: &Path, records: &[InquiryRecord]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let line = serde_json::json!({
            "id": r.id,
            "patient": r.patient_text,
            "physician": r.physician_text,
            "source_row": r.source_row,
        });
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Reads a file written by [`write_jsonl`], keeping the original `source_row`.
pub fn read_canonical(path: &Path) -> Result<Vec<InquiryRecord>, CorpusError> {
    let mut records = load_corpus(path, CorpusFormat::JsonLines, &CorpusColumns::default())?;
    let file = File::open(path).map_err(io_err(path))?;
    let rows = BufReader::new(file).lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    for (r, line) in records.iter_mut().zip(rows) {
        let line = line.map_err(io_err(path))?;
        if let Ok(v) = serde_json::from_str::<Value>(&line) {
            if let Some(s) = v.get("source_row").and_then(Value::as_u64) {
                r.source_row = s;
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub config: FilterConfig,
    pub input: usize,
    pub kept: usize,
    pub excluded: usize,
    pub by_reason: BTreeMap<ExclusionReason, usize>,
    pub exclusions: Vec<Exclusion>,
}

impl FilterReport {
    pub fn new(cfg: &FilterConfig, outcome: &FilterOutcome) -> Self {
        let mut by_reason = BTreeMap::new();
        for e in &outcome.excluded {
            *by_reason.entry(e.reason).or_insert(0) += 1;
        }
        FilterReport {
            config: *cfg,
            input: outcome.kept.len() + outcome.excluded.len(),
            kept: outcome.kept.len(),
            excluded: outcome.excluded.len(),
            by_reason,
            exclusions: outcome.excluded.clone(),
        }
    }
}
