use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use triage_bench::config::{ConfigError, ExperimentConfig};
use triage_bench::labels::{read_ids, write_labels};
use triage_bench::manifest::{RunManifest, StageStatus};
use triage_bench::pipeline::{run_experiment, run_until, PipelineError, Stage, GOLD_IDS};
use triage_bench::predio::write_predictions;
use triage_bench::synthetic::write_fixture;
use triage_core::{PredictionOutcome, PredictionSet, PromptSetting, TriageLabel};

/// Relative path and sha256 of every run artifact except the manifest and cache.
fn artifact_digests(run: &Path) -> BTreeMap<String, String> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
            if p.is_dir() {
                if rel != "cache" {
                    walk(base, &p, out);
                }
            } else if rel != "manifest.json" {
                out.insert(rel, triage_bench::manifest::file_digest(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(run, run, &mut out);
    out
}

fn statuses(m: &RunManifest) -> Vec<(String, StageStatus)> {
    m.stages.iter().map(|s| (s.name.clone(), s.status)).collect()
}

#[test]
fn smoke_run_produces_full_tree_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path()).unwrap();
    let loaded = ExperimentConfig::load(&fx.config).unwrap();
    let first = run_experiment(&loaded).unwrap();
    let run = dir.path().join("run");

    let names: Vec<&str> = first.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        names,
        ["filter", "sample", "split", "train", "demos", "classify:stub-careful", "classify:stub-noisy", "evaluate", "consensus", "report"]
    );
    assert!(first.stages.iter().all(|s| s.status == StageStatus::Ran));
    for f in [
        "filter/kept.jsonl",
        "sample/pool.json",
        "split/gold_ids.txt",
        "baseline/model.json",
        "predictions/tfidf-logreg.jsonl",
        "predictions/stub-careful__12-shot.jsonl",
        "evaluation/reports.json",
        "consensus/pairs.json",
        "reports/model_performance.csv",
        "reports/prompt_sensitivity.md",
        "reports/tradeoff.svg",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let svg = fs::read_to_string(run.join("reports/tradeoff.svg")).unwrap();
    assert_eq!(svg.matches("class=\"point\"").count(), 7);

    let before = artifact_digests(&run);
    let second = run_experiment(&loaded).unwrap();
    assert!(second.stages.iter().all(|s| s.status == StageStatus::Reused));
    assert_eq!(artifact_digests(&run), before);

    // Fresh directory, same config: byte-identical artifacts.
    fs::remove_dir_all(&run).unwrap();
    run_experiment(&loaded).unwrap();
    assert_eq!(artifact_digests(&run), before);
}

#[test]
fn changed_bootstrap_reruns_only_downstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path()).unwrap();
    let mut loaded = ExperimentConfig::load(&fx.config).unwrap();
    run_experiment(&loaded).unwrap();
    loaded.config.evaluation.replicates = 100;
    let m = run_experiment(&loaded).unwrap();
    for (name, status) in statuses(&m) {
        let expect = if ["evaluate", "consensus", "report"].contains(&name.as_str()) {
            StageStatus::Ran
        } else {
            StageStatus::Reused
        };
        assert_eq!(status, expect, "{name}");
    }
}

#[test]
fn missing_prediction_file_fails_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path()).unwrap();
    let mut text = fs::read_to_string(&fx.config).unwrap();
    text.push_str("\n[[external]]\nname = \"vendor\"\npath = \"no-such-file.csv\"\n");
    fs::write(&fx.config, text).unwrap();
    let loaded = ExperimentConfig::load(&fx.config).unwrap();
    match run_experiment(&loaded) {
        Err(PipelineError::Config(ConfigError::Invalid(msgs))) => {
            assert!(msgs.iter().any(|m| m.contains("no-such-file.csv")), "{msgs:?}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    assert!(!dir.path().join("run").exists());
}

#[test]
fn stage_error_names_stage_and_keeps_completed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path()).unwrap();
    // This seed leaves the few-shot split short of one class.
    let text = fs::read_to_string(&fx.config).unwrap().replace("seed = 5", "seed = 42");
    fs::write(&fx.config, text).unwrap();
    let loaded = ExperimentConfig::load(&fx.config).unwrap();
    let err = run_experiment(&loaded).unwrap_err();
    let PipelineError::Stage { stage, manifest, .. } = &err else { panic!("{err}") };
    assert_eq!(stage, "demos");
    let saved = RunManifest::load(manifest.parent().unwrap()).unwrap();
    let names: Vec<&str> = saved.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["filter", "sample", "split", "train"]);
    assert!(err.to_string().contains("stage demos failed"));
}

#[test]
fn external_predictions_are_ingested_and_compared() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path()).unwrap();
    let loaded = ExperimentConfig::load(&fx.config).unwrap();
    run_until(&loaded, Stage::Split).unwrap();

    let gold_ids = read_ids(&dir.path().join("run").join(GOLD_IDS)).unwrap();
    let preds: BTreeMap<_, _> = gold_ids.iter().map(|id| (*id, TriageLabel::ScheduleVisit)).collect();
    write_labels(&dir.path().join("vendor.csv"), &preds).unwrap();
    let mut text = fs::read_to_string(&fx.config).unwrap();
    text.push_str("\n[[external]]\nname = \"vendor\"\npath = \"vendor.csv\"\n");
    fs::write(&fx.config, text).unwrap();

    let loaded = ExperimentConfig::load(&fx.config).unwrap();
    let m = run_experiment(&loaded).unwrap();
    assert_eq!(m.stage("split").unwrap().status, StageStatus::Reused);
    assert_eq!(m.stage("ingest:vendor").unwrap().status, StageStatus::Ran);
    let perf = fs::read_to_string(dir.path().join("run/reports/model_performance.csv")).unwrap();
    assert!(perf.lines().any(|l| l.starts_with("vendor,")));
    // 8 configurations, all unordered pairs.
    let pairs: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run/consensus/pairs.json")).unwrap()).unwrap();
    assert_eq!(pairs.as_array().unwrap().len(), 28);
}

fn set_with(name: &str, labels: &[TriageLabel]) -> PredictionSet {
    let mut s = PredictionSet::new(name, PromptSetting::External);
    for (i, l) in labels.iter().enumerate() {
        s.entries.insert(i as u64, PredictionOutcome::from_label(*l));
    }
    s
}

#[test]
fn cli_compare_exact_mcnemar() {
    use TriageLabel::*;
    let dir = tempfile::tempdir().unwrap();
    // 10 cases only A gets right, 2 only B gets right, 5 both right.
    let gold = [SelfCare; 17];
    let mut a = vec![SelfCare; 17];
    let mut b = vec![SelfCare; 17];
    for x in b.iter_mut().take(10) {
        *x = EmergencyReferral;
    }
    for x in a.iter_mut().skip(10).take(2) {
        *x = ScheduleVisit;
    }
    let gold_map: BTreeMap<_, _> = gold.iter().enumerate().map(|(i, l)| (i as u64, *l)).collect();
    write_labels(&dir.path().join("gold.csv"), &gold_map).unwrap();
    write_predictions(&dir.path().join("a.jsonl"), &set_with("a", &a)).unwrap();
    write_predictions(&dir.path().join("b.jsonl"), &set_with("b", &b)).unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_triage-bench"))
        .args(["compare", "--gold"])
        .arg(dir.path().join("gold.csv"))
        .arg(dir.path().join("a.jsonl"))
        .arg(dir.path().join("b.jsonl"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mcnemar"]["b"], 10);
    assert_eq!(v["mcnemar"]["c"], 2);
    let p = v["mcnemar"]["p_value"].as_f64().unwrap();
    assert!((p - 0.0386).abs() < 5e-5, "p = {p}");
}

#[test]
fn cli_demo_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_triage-bench");
    let demo = Command::new(bin).arg("demo").arg(dir.path()).output().unwrap();
    assert!(demo.status.success());
    let out = Command::new(bin)
        .args(["run", "--replicates", "50", "--config"])
        .arg(dir.path().join("experiment.toml"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("report") && l.ends_with("ran")));

    let bad = Command::new(bin)
        .args(["run", "--sampling-seed", "42", "--config"])
        .arg(dir.path().join("experiment.toml"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("stage demos failed"));
}
