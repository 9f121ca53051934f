//! Label tables (`id,label` csv or json-lines) and plain id lists.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;
use triage_core::{GoldLabels, RecordId, TriageLabel};

#[derive(Debug, thiserror::Error)]
pub enum LabelFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: row {row}: {message}")]
    Malformed { path: PathBuf, row: u64, message: String },
    #[error("{path}: row {row}: duplicate id {id}")]
    DuplicateId { path: PathBuf, row: u64, id: RecordId },
    #[error("{path}: row {row}: {label:?} is not a canonical label")]
    NotCanonical { path: PathBuf, row: u64, label: String },
}

/// One row of a label table with the label kept as raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub row: u64,
    pub id: RecordId,
    pub label: String,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> LabelFileError + '_ {
    move |source| LabelFileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads `id,label` rows; duplicate ids are an error.
pub fn read_label_table(path: &Path) -> Result<Vec<LabelRow>, LabelFileError> {
    let malformed = |row: u64, message: String| LabelFileError::Malformed {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rows = Vec::new();
    if is_csv(path) {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(0, e.to_string()))?;
        let headers = rdr.headers().map_err(|e| malformed(0, e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| malformed(0, format!("missing column {name:?}")))
        };
        let (id_col, label_col) = (col("id")?, col("label")?);
        for (i, rec) in rdr.records().enumerate() {
            let row = i as u64 + 1;
            let rec = rec.map_err(|e| malformed(row, e.to_string()))?;
            let id_text = rec.get(id_col).unwrap_or("").trim();
            let id = id_text
                .parse()
                .map_err(|_| malformed(row, format!("bad id {id_text:?}")))?;
            let label = rec.get(label_col).unwrap_or("").to_string();
            rows.push(LabelRow { row, id, label });
        }
    } else {
        let file = File::open(path).map_err(io_err(path))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let row = i as u64 + 1;
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(&line).map_err(|e| malformed(row, e.to_string()))?;
            let id = match v.get("id") {
                Some(Value::Number(n)) => n.as_u64(),
                Some(Value::String(s)) => s.trim().parse().ok(),
                _ => None,
            }
            .ok_or_else(|| malformed(row, "missing or invalid id".into()))?;
            let label = match v.get("label") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => return Err(malformed(row, "missing label".into())),
            };
            rows.push(LabelRow { row, id, label });
        }
    }
    let mut seen = BTreeSet::new();
    for r in &rows {
        if !seen.insert(r.id) {
            return Err(LabelFileError::DuplicateId {
                path: path.to_path_buf(),
                row: r.row,
                id: r.id,
            });
        }
    }
    Ok(rows)
}

/// Reference labels must already be canonical.
pub fn read_gold(path: &Path) -> Result<GoldLabels, LabelFileError> {
    read_label_table(path)?
        .into_iter()
        .map(|r| match r.label.parse::<TriageLabel>() {
            Ok(l) => Ok((r.id, l)),
            Err(_) => Err(LabelFileError::NotCanonical {
                path: path.to_path_buf(),
                row: r.row,
                label: r.label,
            }),
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &GoldLabels) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "id,label")?;
    for (id, l) in labels {
        writeln!(w, "{id},{l}")?;
    }
    w.flush()
}

/// One id per line; blank lines and `#` comments are ignored.
pub fn read_ids(path: &Path) -> Result<Vec<RecordId>, LabelFileError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|_| LabelFileError::Malformed {
            path: path.to_path_buf(),
            row: i as u64 + 1,
            message: format!("bad id {t:?}"),
        })?);
    }
    Ok(out)
}

pub fn write_ids(path: &Path, ids: &[RecordId]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_requires_canonical_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        fs::write(&p, "id,label\n1,self-care\n2,urgent\n").unwrap();
        let err = read_gold(&p).unwrap_err();
        assert!(matches!(err, LabelFileError::NotCanonical { row: 2, .. }), "{err}");
    }

    #[test]
    fn jsonl_and_csv_agree() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("g.csv");
        let b = dir.path().join("g.jsonl");
        fs::write(&a, "id,label\n1,self-care\n2,emergency-referral\n").unwrap();
        fs::write(&b, "{\"id\":1,\"label\":\"self-care\"}\n{\"id\":\"2\",\"label\":\"emergency-referral\"}\n").unwrap();
        assert_eq!(read_gold(&a).unwrap(), read_gold(&b).unwrap());
        let out = dir.path().join("o.csv");
        write_labels(&out, &read_gold(&a).unwrap()).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(&a).unwrap());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        fs::write(&p, "id,label\n1,self-care\n1,self-care\n").unwrap();
        assert!(matches!(read_gold(&p), Err(LabelFileError::DuplicateId { id: 1, .. })));
    }

    #[test]
    fn id_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ids.txt");
        write_ids(&p, &[3, 1, 2]).unwrap();
        assert_eq!(read_ids(&p).unwrap(), [3, 1, 2]);
    }
}
