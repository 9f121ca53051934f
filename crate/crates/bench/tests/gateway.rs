use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use triage_bench::gateway::{
    run_classification_job, Backend, AttemptError, BackendConfig, BackendKind, GatewayError, HttpBackend, JobError,
    JobSpec, ResponseCache, StubBackend, StubOptions,
};
use triage_core::evaluation::evaluate_set;
use triage_core::metrics::BootstrapConfig;
use triage_core::prompt::{DemoPlacement, PromptTemplate, RenderedPrompt, BASE_PROMPT, BASE_PROMPT_VERSION};
use triage_core::{FailureReason, GoldLabels, PredictionOutcome, PromptSetting, RecordId, TriageLabel};

const GOOD: &str = r#"{"label": "self-care", "confidence": "high", "insufficient_info": false}"#;

fn template() -> PromptTemplate {
    PromptTemplate::new(BASE_PROMPT_VERSION, BASE_PROMPT).unwrap()
}

fn spec(template: &PromptTemplate) -> JobSpec<'_> {
    JobSpec {
        model_name: "m",
        setting: PromptSetting::ZeroShot,
        template,
        demos: &[],
        placement: DemoPlacement::default(),
        parallelism: 4,
    }
}

fn cases(n: usize) -> Vec<(RecordId, String)> {
    (0..n as RecordId).map(|i| (i, format!("message number {i} about a sore throat"))).collect()
}

/// Serves canned HTTP responses: `statuses[i]` for request `i`, then 200.
fn serve(statuses: Vec<u16>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let count = Arc::new(AtomicUsize::new(0));
    let seen = count.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let i = seen.fetch_add(1, Ordering::SeqCst);
            let status = statuses.get(i).copied().unwrap_or(200);
            let payload = if status == 200 {
                serde_json::json!({ "choices": [{ "message": { "content": GOOD } }] }).to_string()
            } else {
                "{\"error\": \"busy\"}".to_string()
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    (url, count)
}

fn http_config(url: &str, max_retries: u32) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::OpenaiCompatibleChat,
        base_url: url.into(),
        model_id: "local".into(),
        max_retries,
        backoff_ms: 1,
        timeout_secs: 5.0,
        ..BackendConfig::default()
    }
}

#[test]
fn retries_transient_failures_then_succeeds() {
    let (url, count) = serve(vec![503, 503]);
    let cfg = http_config(&url, 3);
    let backend = HttpBackend::new(&cfg).unwrap();
    let t = template();
    let (set, stats) = run_classification_job(&backend, &cfg, &spec(&t), &cases(1), None).unwrap();
    assert_eq!(count.load(Ordering::SeqCst), 3);
    assert_eq!(stats.requests, 3);
    assert_eq!(set.entries[&0].label(), Some(TriageLabel::SelfCare));
}

#[test]
fn exhausted_retries_become_parse_failures() {
    let (url, count) = serve(vec![503; 10]);
    let cfg = http_config(&url, 2);
    let backend = HttpBackend::new(&cfg).unwrap();
    let t = template();
    let (set, stats) = run_classification_job(&backend, &cfg, &spec(&t), &cases(1), None).unwrap();
    assert_eq!(count.load(Ordering::SeqCst), 3);
    assert_eq!(stats.transport_failures, 1);
    match &set.entries[&0] {
        PredictionOutcome::ParseFailure(f) => {
            assert_eq!(f.reason, FailureReason::NoObjectFound);
            assert!(f.note.as_deref().unwrap_or("").contains("503"));
        }
        other => panic!("expected a failure, got {other:?}"),
    }
}

#[test]
fn client_errors_abort_the_job() {
    let (url, count) = serve(vec![401]);
    let cfg = http_config(&url, 3);
    let backend = HttpBackend::new(&cfg).unwrap();
    let t = template();
    let mut s = spec(&t);
    s.parallelism = 1;
    let err = run_classification_job(&backend, &cfg, &s, &cases(1), None).unwrap_err();
    assert!(matches!(err, JobError::Backend { source: GatewayError::Status { status: 401, .. }, .. }));
    assert_eq!(count.load(Ordering::SeqCst), 1);
}

#[test]
fn missing_credential_is_reported() {
    let cfg = BackendConfig {
        api_key_env: Some("TRIAGE_BENCH_TEST_UNSET_KEY".into()),
        ..http_config("http://127.0.0.1:9", 0)
    };
    assert!(matches!(HttpBackend::new(&cfg), Err(GatewayError::MissingCredential(v)) if v == "TRIAGE_BENCH_TEST_UNSET_KEY"));
}

/// Answers garbage for the listed case numbers and a fixed label otherwise.
struct Scripted {
    garbage: BTreeSet<RecordId>,
}

impl Backend for Scripted {
    fn send(&self, prompt: &RenderedPrompt) -> Result<String, AttemptError> {
        let n: RecordId = prompt
            .query()
            .split_whitespace()
            .find_map(|w| w.parse().ok())
            .expect("case number in message");
        Ok(if self.garbage.contains(&n) { "Sorry, I cannot help with that.".into() } else { GOOD.into() })
    }
}

#[test]
fn scripted_garbage_rate() {
    let backend = Scripted {
        garbage: [3, 17, 40, 99, 150, 201, 250, 299].into(),
    };
    let cfg = BackendConfig {
        model_id: "scripted".into(),
        ..BackendConfig::default()
    };
    let t = template();
    let cases = cases(300);
    let (set, _) = run_classification_job(&backend, &cfg, &spec(&t), &cases, None).unwrap();
    assert_eq!(set.failure_count(), 8);
    let gold: GoldLabels = cases.iter().map(|(id, _)| (*id, TriageLabel::SelfCare)).collect();
    let report = evaluate_set(&gold, &set, BootstrapConfig { replicates: 50, seed: 1 }).unwrap();
    assert_eq!(report.valid_n, 292);
    assert!((report.parse_fail_rate - 8.0 / 300.0).abs() < 1e-12);
}

#[test]
fn cache_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ResponseCache::open(dir.path()).unwrap();
    let cfg = BackendConfig {
        model_id: "stub".into(),
        stub: StubOptions { noise: 0.3, garbage_rate: 0.1 },
        ..BackendConfig::default()
    };
    let backend = StubBackend::new("stub", cfg.stub);
    let t = template();
    let cases = cases(40);
    let (plain, _) = run_classification_job(&backend, &cfg, &spec(&t), &cases, None).unwrap();
    let (cold, cold_stats) = run_classification_job(&backend, &cfg, &spec(&t), &cases, Some(&cache)).unwrap();
    let (warm, warm_stats) = run_classification_job(&backend, &cfg, &spec(&t), &cases, Some(&cache)).unwrap();
    assert_eq!(plain.entries, cold.entries);
    assert_eq!(cold.entries, warm.entries);
    assert_eq!((cold_stats.requests, cold_stats.cache_hits), (40, 0));
    assert_eq!((warm_stats.requests, warm_stats.cache_hits), (0, 40));
    assert_eq!(cache.len(), 40);
}

#[test]
fn empty_job_sends_nothing() {
    let (url, count) = serve(vec![]);
    let cfg = http_config(&url, 0);
    let backend = HttpBackend::new(&cfg).unwrap();
    let t = template();
    let (set, stats) = run_classification_job(&backend, &cfg, &spec(&t), &[], None).unwrap();
    assert!(set.entries.is_empty());
    assert_eq!(stats.requests, 0);
    assert_eq!(count.load(Ordering::SeqCst), 0);
}
