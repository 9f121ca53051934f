//! Remote model backends, the response cache and classification jobs.

mod cache;
mod http;
mod ingest;
mod stub;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use triage_core::digest::sha256_hex;
use triage_core::parse::{FailureReason, ParseFailure, PredictionOutcome};
use triage_core::predictions::ids_digest;
use triage_core::prompt::{render_prompt, DemoPlacement, Demonstration, PromptError, PromptTemplate, RenderedPrompt};
use triage_core::{parse_structured_output, PredictionSet, PromptSetting, RecordId};

pub use cache::{CacheEntry, ResponseCache};
pub use http::HttpBackend;
pub use ingest::{ingest_prediction_file, IngestError};
pub use stub::{StubBackend, StubOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    OpenaiCompatibleChat,
    OllamaGenerate,
    /// Deterministic offline backend for smoke runs and tests.
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// e.g. `https://api.openai.com/v1` or `http://localhost:11434`.
    pub base_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub stub: StubOptions,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Stub,
            base_url: String::new(),
            model_id: String::new(),
            temperature: 0.0,
            max_output_tokens: 256,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            api_key_env: None,
            stub: StubOptions::default(),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::Config(m.to_string()));
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a finite value >= 0");
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        if self.kind != BackendKind::Stub && self.base_url.trim().is_empty() {
            return bad("base_url is required for remote backends");
        }
        self.stub.validate().map_err(|m| GatewayError::Config(m.into()))
    }

    /// Digest of the fields that affect model output.
    pub fn output_digest(&self) -> String {
        let key = serde_json::json!({
            "kind": self.kind,
            "base_url": self.base_url,
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "stub": self.stub,
        });
        sha256_hex(key.to_string().as_bytes())
    }
}

/// Outcome of a single request attempt.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttemptError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    Protocol(String),
}

impl AttemptError {
    fn retryable(&self) -> bool {
        match self {
            AttemptError::Transport(_) => true,
            AttemptError::Status { status, .. } => *status == 429 || *status >= 500,
            AttemptError::Protocol(_) => false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("gave up after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: AttemptError },
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    Protocol(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("response cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// One request attempt against a model. Retries live in [`classify_remote`].
pub trait Backend: Send + Sync {
    /// Returns the model's output text.
    fn send(&self, prompt: &RenderedPrompt) -> Result<String, AttemptError>;
}

pub fn make_backend(cfg: &BackendConfig) -> Result<Box<dyn Backend>, GatewayError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Stub => Box::new(StubBackend::new(&cfg.model_id, cfg.stub)),
        _ => Box::new(HttpBackend::new(cfg)?),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub text: String,
    pub cache_hit: bool,
    /// Requests actually sent; 0 on a cache hit.
    pub attempts: u32,
}

/// Cached lookup, then up to `1 + max_retries` attempts with exponential backoff.
pub fn classify_remote(
    backend: &dyn Backend,
    cfg: &BackendConfig,
    prompt: &RenderedPrompt,
    cache: Option<&ResponseCache>,
) -> Result<Response, GatewayError> {
    if let Some(text) = cache.and_then(|c| c.get(&cfg.model_id, &prompt.content_hash, cfg.temperature)) {
        return Ok(Response {
            text,
            cache_hit: true,
            attempts: 0,
        });
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        match backend.send(prompt) {
            Ok(text) => {
                if let Some(c) = cache {
                    c.put(&cfg.model_id, &prompt.content_hash, cfg.temperature, &text)?;
                }
                return Ok(Response {
                    text,
                    cache_hit: false,
                    attempts,
                });
            }
            Err(e) if e.retryable() => {
                if attempts > cfg.max_retries {
                    return Err(GatewayError::Transport { attempts, last: e });
                }
                let delay = cfg.backoff_ms.saturating_mul(1u64 << (attempts - 1).min(16));
                thread::sleep(Duration::from_millis(delay));
            }
            Err(AttemptError::Status { status, body }) => return Err(GatewayError::Status { status, body }),
            Err(AttemptError::Protocol(m)) => return Err(GatewayError::Protocol(m)),
            Err(e @ AttemptError::Transport(_)) => return Err(GatewayError::Transport { attempts, last: e }),
        }
    }
}

/// Prompting choices shared by every case in a job.
#[derive(Debug, Clone, Copy)]
pub struct JobSpec<'a> {
    pub model_name: &'a str,
    pub setting: PromptSetting,
    pub template: &'a PromptTemplate,
    pub demos: &'a [Demonstration],
    pub placement: DemoPlacement,
    pub parallelism: usize,
}

pub const DEFAULT_PARALLELISM: usize = 4;

impl JobSpec<'_> {
    pub fn config_digest(&self, cfg: &BackendConfig) -> String {
        let key = serde_json::json!({
            "backend": cfg.output_digest(),
            "setting": self.setting,
            "template_version": self.template.version,
            "template": sha256_hex(self.template.text.as_bytes()),
            "placement": self.placement,
            "demos": self.demos.iter().map(|d| d.id).collect::<Vec<_>>(),
        });
        sha256_hex(key.to_string().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobStats {
    pub requests: u64,
    pub cache_hits: u64,
    pub transport_failures: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("case {id}: {source}")]
    Prompt { id: RecordId, source: PromptError },
    #[error("case {id}: {source}")]
    Backend { id: RecordId, source: GatewayError },
}

fn failure_outcome(err: &GatewayError) -> PredictionOutcome {
    PredictionOutcome::ParseFailure(ParseFailure::new("", FailureReason::NoObjectFound).with_note(err.to_string()))
}

/// Renders, sends and parses every case.
///
/// Transport and malformed-body errors become parse failures and the job
/// continues; any other status aborts the job. Entries are keyed by case id,
/// so completion order never matters.
pub fn run_classification_job(
    backend: &dyn Backend,
    cfg: &BackendConfig,
    spec: &JobSpec<'_>,
    cases: &[(RecordId, String)],
    cache: Option<&ResponseCache>,
) -> Result<(PredictionSet, JobStats), JobError> {
    let mut prompts = Vec::with_capacity(cases.len());
    for (id, text) in cases {
        let p = render_prompt(spec.template, spec.setting, spec.demos, text, spec.placement)
            .map_err(|source| JobError::Prompt { id: *id, source })?;
        prompts.push((*id, p));
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let requests = AtomicU64::new(0);
    let hits = AtomicU64::new(0);
    let transport = AtomicU64::new(0);
    let results: Mutex<BTreeMap<RecordId, PredictionOutcome>> = Mutex::new(BTreeMap::new());
    let fatal: Mutex<Option<JobError>> = Mutex::new(None);

    let workers = spec.parallelism.max(1).min(prompts.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((id, prompt)) = prompts.get(i) else { break };
                let outcome = match classify_remote(backend, cfg, prompt, cache) {
                    Ok(r) => {
                        requests.fetch_add(u64::from(r.attempts), Ordering::Relaxed);
                        hits.fetch_add(u64::from(r.cache_hit), Ordering::Relaxed);
                        parse_structured_output(&r.text).into()
                    }
                    Err(e @ (GatewayError::Transport { .. } | GatewayError::Protocol(_))) => {
                        if let GatewayError::Transport { attempts, .. } = &e {
                            requests.fetch_add(u64::from(*attempts), Ordering::Relaxed);
                        }
                        transport.fetch_add(1, Ordering::Relaxed);
                        failure_outcome(&e)
                    }
                    Err(source) => {
                        stop.store(true, Ordering::Relaxed);
                        fatal
                            .lock()
                            .unwrap()
                            .get_or_insert(JobError::Backend { id: *id, source });
                        break;
                    }
                };
                results.lock().unwrap().insert(*id, outcome);
            });
        }
    });

    if let Some(e) = fatal.into_inner().unwrap() {
        return Err(e);
    }
    let mut set = PredictionSet::new(spec.model_name, spec.setting);
    set.entries = results.into_inner().unwrap();
    set.gold_digest = Some(ids_digest(cases.iter().map(|(id, _)| *id)));
    set.meta.config_digest = spec.config_digest(cfg);
    let stats = JobStats {
        requests: requests.into_inner(),
        cache_hits: hits.into_inner(),
        transport_failures: transport.into_inner(),
    };
    set.meta.requests = stats.requests;
    set.meta.cache_hits = stats.cache_hits;
    Ok((set, stats))
}
