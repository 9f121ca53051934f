//! Shared triage prompt and in-context demonstrations.
//!
//! A rendered prompt is the base instruction text, followed by the
//! demonstration block (if any), followed by the final `Patient message:`
//! section with the query substituted. For chat backends the text is split
//! into a system part and a user part according to [`DemoPlacement`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::digest;
use crate::label::TriageLabel;
use crate::predictions::{PromptSetting, RecordId};

pub const BASE_PROMPT_VERSION: &str = "triage-base-v1";

/// Placeholder replaced by the query text.
pub const PLACEHOLDER: &str = "{patient_message}";

/// The final section of the template that carries the query.
const QUERY_SECTION: &str = "Patient message:\n{patient_message}";

pub const BASE_PROMPT: &str = r#"### Role: You are a clinical workflow triage classifier for online patient inquiries.
### Task: Classify the patient message into exactly one triage label. This is for workflow routing, not diagnosis or treatment recommendation.
Allowed labels:
1. self-care
2. schedule-visit
3. urgent-clinician-review
4. emergency-referral

### Definitions::
[self-care]
Use for general health questions, mild short-duration symptoms, stable known conditions, medication/lifestyle questions, retrospective checks, or informational questions that do not require prompt clinician evaluation.
[schedule-visit]
Use when the message suggests the patient should have a non-urgent clinician visit or routine evaluation within days to weeks. This includes persistent but stable symptoms, mild new findings, medication adjustment questions, specialist referral needs, or unresolved recurring issues without urgent red flags.
[urgent-clinician-review]
Use when the message suggests clinician review is needed within 24–48 hours. This includes worsening symptoms, moderate or severe pain, fever lasting more than 48 hours, signs of infection, non-sudden neurological symptoms, concerning symptoms in infants/elderly/immunocompromised patients, or passive suicidal ideation without stated plan or intent.
[emergency-referral]
Use when the message suggests immediate emergency risk. This includes severe or crushing chest pain, chest pain with radiation, severe shortness of breath, loss of consciousness, stroke-like symptoms, seizure, severe bleeding, severe allergic reaction, sepsis-like deterioration, infant under 3 months with fever, or suicidal ideation with plan or intent.

### Decision rules:
- Assign the label based on the most severe signal in the message.
- Do not diagnose. Classify only the urgency of response.
- If the message is informational or retrospective and no one has active unmanaged symptoms, use self-care unless the patient asks for next-step action.
- If symptoms are active, worsening, persistent, or functionally impairing, do not use self-care.
- If a special population is involved, such as an infant, elderly patient, pregnancy, or immunocompromised patient, use a lower threshold for escalation.
- If uncertain between two adjacent severity levels, choose the higher-risk label.
- If the message is too vague but contains some clinical signal, still assign the safest reasonable triage label and set insufficient_info to true.
- If the message has no usable clinical content, assign schedule-visit and set insufficient_info to true.

### Output format:
Return valid JSON only. Do not include markdown, explanations, or extra text.
Schema:
{
  "label": "self-care | schedule-visit | urgent-clinician-review | emergency-referral",
  "confidence": "high | medium | low",
  "insufficient_info": true | false
}
Patient message:
{patient_message}"#;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("template must end with the section `Patient message:\\n{{patient_message}}`")]
    MissingQuerySection,
    #[error("{setting} needs {expected} demonstrations, got {actual}")]
    DemoCount {
        setting: PromptSetting,
        expected: usize,
        actual: usize,
    },
    #[error("setting {0} cannot be rendered as a prompt")]
    NotPrompted(PromptSetting),
    #[error("few-shot pool has {available} `{label}` examples, need {needed}")]
    TooFewExamples {
        label: TriageLabel,
        available: usize,
        needed: usize,
    },
    #[error("configured demonstration id {id} is not a `{label}` example in the few-shot pool")]
    UnknownDemoId { id: RecordId, label: TriageLabel },
    #[error("demonstrations per class must be 0, 1 or 3, got {0}")]
    PerClass(usize),
}

/// Versioned prompt template ending in the query section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub version: String,
    pub text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            version: BASE_PROMPT_VERSION.to_string(),
            text: BASE_PROMPT.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(version: impl Into<String>, text: impl Into<String>) -> Result<Self, PromptError> {
        let t = Self {
            version: version.into(),
            text: text.into(),
        };
        t.instructions()?;
        Ok(t)
    }

    /// Template text before the query section.
    pub fn instructions(&self) -> Result<&str, PromptError> {
        self.text
            .trim_end()
            .strip_suffix(QUERY_SECTION)
            .ok_or(PromptError::MissingQuerySection)
    }
}

/// A labeled few-shot pool example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: RecordId,
    pub text: String,
    pub label: TriageLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: RecordId,
    pub patient_text: String,
    pub label: TriageLabel,
    /// 1-based rank within its class.
    pub rank: usize,
}

/// Picks `per_class` demonstrations per label from the few-shot pool.
///
/// Within a class, explicitly configured ids come first (in configured
/// order), then the lowest remaining ids. The output lists the rank-1
/// demonstration of every class in severity order, then the remaining ranks
/// class by class, so the 4-shot set is a prefix of the 12-shot set.
pub fn select_demonstrations(
    pool: &[LabeledExample],
    per_class: usize,
    configured: &BTreeMap<TriageLabel, Vec<RecordId>>,
) -> Result<Vec<Demonstration>, PromptError> {
    if !matches!(per_class, 0 | 1 | 3) {
        return Err(PromptError::PerClass(per_class));
    }
    let mut by_class: Vec<Vec<Demonstration>> = Vec::with_capacity(TriageLabel::COUNT);
    for label in TriageLabel::ALL {
        let mut members: Vec<&LabeledExample> = pool.iter().filter(|e| e.label == label).collect();
        members.sort_by_key(|e| e.id);
        if members.len() < per_class {
            return Err(PromptError::TooFewExamples {
                label,
                available: members.len(),
                needed: per_class,
            });
        }
        let mut chosen: Vec<&LabeledExample> = Vec::with_capacity(per_class);
        for id in configured.get(&label).map(Vec::as_slice).unwrap_or(&[]) {
            if chosen.len() == per_class {
                break;
            }
            let ex = members
                .iter()
                .find(|e| e.id == *id)
                .ok_or(PromptError::UnknownDemoId { id: *id, label })?;
            if !chosen.iter().any(|c| c.id == ex.id) {
                chosen.push(ex);
            }
        }
        for ex in &members {
            if chosen.len() == per_class {
                break;
            }
            if !chosen.iter().any(|c| c.id == ex.id) {
                chosen.push(ex);
            }
        }
        by_class.push(
            chosen
                .into_iter()
                .enumerate()
                .map(|(i, e)| Demonstration {
                    id: e.id,
                    patient_text: e.text.clone(),
                    label,
                    rank: i + 1,
                })
                .collect(),
        );
    }

    let mut out = Vec::with_capacity(per_class * TriageLabel::COUNT);
    for class in &by_class {
        out.extend(class.iter().filter(|d| d.rank == 1).cloned());
    }
    for class in &by_class {
        out.extend(class.iter().filter(|d| d.rank > 1).cloned());
    }
    Ok(out)
}

/// Where the demonstration block goes in a chat request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemoPlacement {
    System,
    #[default]
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
    /// SHA-256 over the rendered text.
    pub content_hash: String,
}

impl RenderedPrompt {
    /// Single-string form for completion-style backends.
    pub fn full_text(&self) -> String {
        alloc::format!("{}\n{}", self.system_text, self.user_text)
    }

    /// The query text, recovered from the final section.
    pub fn query(&self) -> &str {
        self.user_text
            .rfind("Patient message:\n")
            .map(|i| &self.user_text[i + "Patient message:\n".len()..])
            .unwrap_or("")
    }
}

/// `full_text` rejoins the two parts with this newline.
fn strip_newline(s: &str) -> &str {
    s.strip_suffix('\n').unwrap_or(s)
}

fn demo_block(demos: &[Demonstration]) -> String {
    let mut out = String::new();
    for d in demos {
        out.push_str("Patient message:\n\"");
        out.push_str(&d.patient_text);
        out.push_str("\"\nOutput:\n{\"label\":\"");
        out.push_str(d.label.as_str());
        out.push_str("\"}\n\n");
    }
    out
}

/// The demonstration block exactly as it appears inside a rendered prompt.
pub fn render_demonstrations(demos: &[Demonstration]) -> String {
    demo_block(demos)
}

pub fn render_prompt(
    template: &PromptTemplate,
    setting: PromptSetting,
    demos: &[Demonstration],
    message: &str,
    placement: DemoPlacement,
) -> Result<RenderedPrompt, PromptError> {
    let expected = setting.shots().ok_or(PromptError::NotPrompted(setting))?;
    if demos.len() != expected {
        return Err(PromptError::DemoCount {
            setting,
            expected,
            actual: demos.len(),
        });
    }
    let instructions = template.instructions()?;
    let block = demo_block(demos);
    let query = QUERY_SECTION.replace(PLACEHOLDER, message);

    let (system_text, user_text) = match placement {
        DemoPlacement::User => (strip_newline(instructions).to_string(), alloc::format!("{block}{query}")),
        DemoPlacement::System => (strip_newline(&alloc::format!("{instructions}{block}")).to_string(), query),
    };
    let content_hash = digest::sha256_hex_parts(&[system_text.as_bytes(), user_text.as_bytes()]);
    Ok(RenderedPrompt {
        system_text,
        user_text,
        content_hash,
    })
}
