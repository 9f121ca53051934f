//! Normalization of raw model output into structured predictions.
//!
//! Parsing is total: every input string maps to either a
//! [`StructuredPrediction`] or a [`ParseFailure`]. Label matching is exact
//! after a fixed folding pipeline; there is no fuzzy or semantic mapping.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::label::{Confidence, TriageLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredPrediction {
    pub label: TriageLabel,
    pub confidence: Confidence,
    pub insufficient_info: bool,
    pub raw_text: String,
    /// Set when optional fields were defaulted or the bare-label fallback fired.
    pub leniently_parsed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    NoObjectFound,
    UnmappableLabel,
    MissingLabelField,
    MultipleConflictingLabels,
}

impl FailureReason {
    pub const fn as_str(self) -> &'static str {
        match self {
            FailureReason::NoObjectFound => "no-object-found",
            FailureReason::UnmappableLabel => "unmappable-label",
            FailureReason::MissingLabelField => "missing-label-field",
            FailureReason::MultipleConflictingLabels => "multiple-conflicting-labels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub raw_text: String,
    pub reason: FailureReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ParseFailure {
    pub fn new(raw_text: impl Into<String>, reason: FailureReason) -> Self {
        Self {
            raw_text: raw_text.into(),
            reason,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// One case's parsed result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PredictionOutcome {
    Valid(StructuredPrediction),
    ParseFailure(ParseFailure),
}

impl PredictionOutcome {
    pub fn label(&self) -> Option<TriageLabel> {
        match self {
            PredictionOutcome::Valid(p) => Some(p.label),
            PredictionOutcome::ParseFailure(_) => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, PredictionOutcome::Valid(_))
    }

    /// A clean prediction for a label produced by a native classifier.
    pub fn from_label(label: TriageLabel) -> Self {
        PredictionOutcome::Valid(StructuredPrediction {
            label,
            confidence: Confidence::Unknown,
            insufficient_info: false,
            raw_text: label.as_str().to_string(),
            leniently_parsed: false,
        })
    }
}

impl From<Result<StructuredPrediction, ParseFailure>> for PredictionOutcome {
    fn from(r: Result<StructuredPrediction, ParseFailure>) -> Self {
        match r {
            Ok(p) => PredictionOutcome::Valid(p),
            Err(f) => PredictionOutcome::ParseFailure(f),
        }
    }
}

fn fold_label(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase();
    let stripped = lowered.trim_matches(|c: char| !c.is_alphanumeric());
    let mut out = String::with_capacity(stripped.len());
    let mut in_sep = false;
    for c in stripped.chars() {
        if c.is_whitespace() || c == '_' || c == '-' {
            in_sep = true;
        } else {
            if in_sep && !out.is_empty() {
                out.push('-');
            }
            in_sep = false;
            out.push(c);
        }
    }
    out
}

/// Folds case, surrounding punctuation and separators, then requires an exact
/// canonical match.
pub fn normalize_label(raw: &str) -> Result<TriageLabel, ParseFailure> {
    fold_label(raw)
        .parse::<TriageLabel>()
        .map_err(|_| ParseFailure::new(raw, FailureReason::UnmappableLabel))
}

/// Returns the text inside the first code fence, or the input unchanged.
fn strip_code_fence(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    // Skip the info string (e.g. `json`) up to the end of the fence line.
    let body = match after.find('\n') {
        Some(nl) if !after[..nl].contains('{') => &after[nl + 1..],
        _ => after,
    };
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

/// Byte range of the balanced `{...}` starting at `start`, honoring JSON strings.
fn balanced_object_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First balanced substring that parses as a JSON object.
fn first_json_object(text: &str) -> Option<Map<String, Value>> {
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find('{') {
        let start = search_from + rel;
        if let Some(end) = balanced_object_end(text, start) {
            if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text[start..end]) {
                return Some(map);
            }
        }
        search_from = start + 1;
    }
    None
}

fn field<'a>(map: &'a Map<String, Value>, name: &str) -> Option<&'a Value> {
    map.get(name).or_else(|| {
        map.iter()
            .find(|(k, _)| k.trim().eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    })
}

fn label_from_value(value: &Value, raw: &str) -> Result<TriageLabel, ParseFailure> {
    let candidates: Vec<&str> = match value {
        Value::String(s) if s.contains('|') => s.split('|').collect(),
        Value::String(s) => alloc::vec![s.as_str()],
        Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match item.as_str() {
                    Some(s) => out.push(s),
                    None => return Err(ParseFailure::new(raw, FailureReason::UnmappableLabel)),
                }
            }
            out
        }
        _ => return Err(ParseFailure::new(raw, FailureReason::UnmappableLabel)),
    };
    let mut found: Option<TriageLabel> = None;
    for candidate in candidates {
        let label =
            normalize_label(candidate).map_err(|_| ParseFailure::new(raw, FailureReason::UnmappableLabel))?;
        match found {
            Some(prev) if prev != label => {
                return Err(ParseFailure::new(raw, FailureReason::MultipleConflictingLabels));
            }
            _ => found = Some(label),
        }
    }
    found.ok_or_else(|| ParseFailure::new(raw, FailureReason::UnmappableLabel))
}

/// Parses one raw model response.
///
/// Steps: strip a code fence, take the first balanced JSON object and read its
/// `label` (plus optional `confidence` / `insufficient_info`). Without any
/// object, the whole trimmed text is tried as a bare label.
pub fn parse_structured_output(raw: &str) -> Result<StructuredPrediction, ParseFailure> {
    let body = strip_code_fence(raw).trim();

    let Some(map) = first_json_object(body) else {
        return match normalize_label(body) {
            Ok(label) => Ok(StructuredPrediction {
                label,
                confidence: Confidence::Unknown,
                insufficient_info: false,
                raw_text: raw.to_string(),
                leniently_parsed: true,
            }),
            Err(_) => Err(ParseFailure::new(raw, FailureReason::NoObjectFound)),
        };
    };

    let label_value =
        field(&map, "label").ok_or_else(|| ParseFailure::new(raw, FailureReason::MissingLabelField))?;
    let label = label_from_value(label_value, raw)?;

    let mut lenient = false;
    let confidence = match field(&map, "confidence").and_then(Value::as_str).and_then(Confidence::from_loose) {
        Some(c) => c,
        None => {
            lenient = true;
            Confidence::Unknown
        }
    };
    let insufficient_info = match field(&map, "insufficient_info") {
        Some(Value::Bool(b)) => *b,
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("true") => {
            lenient = true;
            true
        }
        _ => {
            lenient = true;
            false
        }
    };

    Ok(StructuredPrediction {
        label,
        confidence,
        insufficient_info,
        raw_text: raw.to_string(),
        leniently_parsed: lenient,
    })
}
