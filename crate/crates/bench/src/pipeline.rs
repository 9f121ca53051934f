//! File-driven experiment stages with manifest-based reuse.
//!
//! Run directory layout:
//!
//! ```text
//! manifest.json
//! filter/      kept.jsonl, report.json
//! sample/      pool.json, pool_ids.txt, assignments.csv
//! split/       silver_ids.txt, gold_ids.txt, fewshot_ids.txt
//! baseline/    model.json, cv.json
//! prompts/     demos.json
//! predictions/ <configuration>.jsonl
//! evaluation/  reports.json, comparisons.json, agreement.json
//! consensus/   pairs.json
//! reports/     *.csv, *.md, tradeoff.svg
//! cache/       response cache (unless configured elsewhere)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use triage_core::baseline::{predict_labels, select_and_fit, SplitRole, TrainingExample, TrainingSubset};
use triage_core::consensus::{pair_sweep, PairRow};
use triage_core::digest::sha256_hex;
use triage_core::evaluation::{compare_sets, evaluate_set, Comparison, EvaluationReport};
use triage_core::metrics::cohens_kappa;
use triage_core::predictions::ids_digest;
use triage_core::prompt::{select_demonstrations, Demonstration, LabeledExample, PromptTemplate, BASE_PROMPT, BASE_PROMPT_VERSION};
use triage_core::sampler::{self, assign_all, build_working_pool, split_pool, BucketCounts, PoolMember};
use triage_core::{quality_filter, GoldLabels, InquiryRecord, PredictionSet, PromptSetting, RecordId};

use crate::config::{ExperimentConfig, LoadedConfig};
use crate::corpus::{load_corpus, read_canonical, write_jsonl, FilterReport};
use crate::gateway::{ingest_prediction_file, make_backend, run_classification_job, JobSpec, ResponseCache};
use crate::labels::{read_gold, read_ids, write_ids};
use crate::manifest::{file_digest, unix_now, RunManifest, SeedRecord, StageRecord, StageStatus};
use crate::predio::{read_predictions, write_predictions};
use crate::report::emit_report;

pub const KEPT: &str = "filter/kept.jsonl";
pub const FILTER_REPORT: &str = "filter/report.json";
pub const POOL: &str = "sample/pool.json";
pub const POOL_IDS: &str = "sample/pool_ids.txt";
pub const ASSIGNMENTS: &str = "sample/assignments.csv";
pub const SILVER_IDS: &str = "split/silver_ids.txt";
pub const GOLD_IDS: &str = "split/gold_ids.txt";
pub const FEWSHOT_IDS: &str = "split/fewshot_ids.txt";
pub const BASELINE_MODEL: &str = "baseline/model.json";
pub const BASELINE_CV: &str = "baseline/cv.json";
pub const DEMOS: &str = "prompts/demos.json";
pub const REPORTS: &str = "evaluation/reports.json";
pub const COMPARISONS: &str = "evaluation/comparisons.json";
pub const AGREEMENT: &str = "evaluation/agreement.json";
pub const PAIRS: &str = "consensus/pairs.json";
pub const REPORT_DIR: &str = "reports";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("stage {stage} failed: {error:#}\ncompleted stages are recorded in {}", manifest.display())]
    Stage {
        stage: String,
        error: anyhow::Error,
        manifest: PathBuf,
    },
    #[error("cannot prepare run directory {}: {source}", path.display())]
    RunDir { path: PathBuf, source: std::io::Error },
}

/// Prediction file for one configuration name (`/` becomes `__`).
pub fn prediction_path(config_name: &str) -> String {
    format!("predictions/{}.jsonl", config_name.replace('/', "__"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Labels for exactly `ids`; any id without a label is an error.
pub fn labels_for(path: &Path, ids: &[RecordId]) -> anyhow::Result<GoldLabels> {
    let all = read_gold(path)?;
    let missing: Vec<String> = ids.iter().filter(|id| !all.contains_key(id)).map(u64::to_string).collect();
    if !missing.is_empty() {
        bail!("{} has no label for id(s) {}", path.display(), missing.join(", "));
    }
    Ok(ids.iter().map(|id| (*id, all[id])).collect())
}

/// Patient texts for `ids`, in the given order.
pub fn texts_for(records: &[InquiryRecord], ids: &[RecordId]) -> anyhow::Result<Vec<(RecordId, String)>> {
    let by_id: BTreeMap<RecordId, &InquiryRecord> = records.iter().map(|r| (r.id, r)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id)
                .map(|r| (*id, r.patient_text.clone()))
                .ok_or_else(|| anyhow!("id {id} is not in the filtered corpus"))
        })
        .collect()
}

pub fn load_template(cfg: &ExperimentConfig) -> anyhow::Result<PromptTemplate> {
    let (version, text) = match &cfg.prompt.template {
        Some(p) => {
            let version = match &cfg.prompt.template_version {
                Some(v) => v.clone(),
                None => format!("custom-{}", &file_digest(p)?[..12]),
            };
            (version, fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
        }
        None => (BASE_PROMPT_VERSION.to_string(), BASE_PROMPT.to_string()),
    };
    Ok(PromptTemplate::new(version, text)?)
}

/// Pool summary written by the sample stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub quotas: BucketCounts,
    pub available: BucketCounts,
    pub taken: BucketCounts,
    pub rules: String,
    pub members: Vec<PoolMember>,
}

/// Demonstrations per prompted setting, as written by the demos stage.
pub type DemoSets = BTreeMap<PromptSetting, Vec<Demonstration>>;

#[derive(Default)]
struct StageOutput {
    files: Vec<String>,
    notes: BTreeMap<String, Value>,
}

impl StageOutput {
    fn files(files: impl IntoIterator<Item = String>) -> Self {
        Self {
            files: files.into_iter().collect(),
            notes: BTreeMap::new(),
        }
    }

    fn note(mut self, key: &str, value: impl Serialize) -> Self {
        self.notes.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

struct Runner<'a> {
    dir: &'a Path,
    previous: Option<RunManifest>,
    manifest: RunManifest,
}

impl Runner<'_> {
    fn digest(&self, rel: &str) -> String {
        self.manifest.output_digest(rel).unwrap_or("").to_string()
    }

    fn fail(&self, stage: &str, source: anyhow::Error) -> PipelineError {
        let _ = self.manifest.save(self.dir);
        PipelineError::Stage {
            stage: stage.into(),
            error: source,
            manifest: self.dir.join(crate::manifest::MANIFEST_FILE),
        }
    }

    fn stage<F>(&mut self, name: &str, input: Value, f: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&Path) -> anyhow::Result<StageOutput>,
    {
        let input_digest = sha256_hex(json!({ "stage": name, "input": input }).to_string().as_bytes());
        let started = unix_now();
        if let Some(prev) = self.previous.as_ref().and_then(|m| m.stage(name)) {
            if prev.input_digest == input_digest && prev.outputs_intact(self.dir) {
                let mut rec = prev.clone();
                rec.status = StageStatus::Reused;
                rec.started_unix = started;
                rec.finished_unix = unix_now();
                self.manifest.stages.push(rec);
                return self.manifest.save(self.dir).map_err(|e| self.fail(name, e.into()));
            }
        }
        let out = f(self.dir).map_err(|e| self.fail(name, e))?;
        let mut outputs = BTreeMap::new();
        for rel in out.files {
            let d = file_digest(&self.dir.join(&rel))
                .with_context(|| format!("hashing output {rel}"))
                .map_err(|e| self.fail(name, e))?;
            outputs.insert(rel, d);
        }
        self.manifest.stages.push(StageRecord {
            name: name.into(),
            input_digest,
            outputs,
            status: StageStatus::Ran,
            started_unix: started,
            finished_unix: unix_now(),
            notes: out.notes,
        });
        self.manifest.save(self.dir).map_err(|e| self.fail(name, e.into()))
    }
}

fn opt_digest(p: Option<&PathBuf>) -> anyhow::Result<Value> {
    Ok(match p {
        Some(p) => json!(file_digest(p).with_context(|| format!("reading {}", p.display()))?),
        None => Value::Null,
    })
}

/// Stage groups, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Filter,
    Sample,
    Split,
    Train,
    Classify,
    Ingest,
    Evaluate,
    Consensus,
    Report,
}

/// Runs every stage in order, reusing stages whose inputs and outputs are
/// unchanged since the previous manifest in the run directory.
pub fn run_experiment(loaded: &LoadedConfig) -> Result<RunManifest, PipelineError> {
    run_until(loaded, Stage::Report)
}

/// Like [`run_experiment`] but stops once `last` has completed.
pub fn run_until(loaded: &LoadedConfig, last: Stage) -> Result<RunManifest, PipelineError> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| PipelineError::RunDir {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut run = Runner {
        dir,
        previous: RunManifest::load(dir),
        manifest: RunManifest {
            tool_version: crate::manifest::TOOL_VERSION.into(),
            config_digest: loaded.digest.clone(),
            seeds: SeedRecord {
                sampling: cfg.sampling.seed,
                bootstrap: cfg.evaluation.seed,
                generator: triage_core::rng::GENERATOR_NAME.into(),
            },
            sampling_rules: sampler::rule_summary(),
            stages: Vec::new(),
        },
    };
    let plan = cfg.sampling.plan();
    let boot = cfg.evaluation.bootstrap();

    let corpus_digest = file_digest(&cfg.corpus.path).map_err(|e| run.fail("filter", e.into()))?;
    run.stage(
        "filter",
        json!({ "corpus": corpus_digest, "format": cfg.corpus.format(), "columns": cfg.corpus.columns, "filter": cfg.filter }),
        |d| {
            let records = load_corpus(&cfg.corpus.path, cfg.corpus.format(), &cfg.corpus.columns)?;
            let outcome = quality_filter(&records, &cfg.filter);
            fs::create_dir_all(d.join("filter"))?;
            write_jsonl(&d.join(KEPT), &outcome.kept)?;
            let report = FilterReport::new(&cfg.filter, &outcome);
            write_json(&d.join(FILTER_REPORT), &report)?;
            Ok(StageOutput::files([KEPT.into(), FILTER_REPORT.into()])
                .note("input", report.input)
                .note("kept", report.kept)
                .note("excluded", report.excluded))
        },
    )?;

    if last <= Stage::Filter {
        return Ok(run.manifest);
    }

    let keywords = cfg.sampling.keyword_lists().map_err(|e| run.fail("sample", e))?;
    run.stage(
        "sample",
        json!({ "kept": run.digest(KEPT), "keywords": sha256_hex(keywords.to_override_text().as_bytes()), "plan": plan }),
        |d| {
            let records = read_canonical(&d.join(KEPT))?;
            let assignments = assign_all(&records, &keywords);
            let pool = build_working_pool(&records, &assignments, &plan)?;
            fs::create_dir_all(d.join("sample"))?;
            let mut w = csv::Writer::from_path(d.join(ASSIGNMENTS))?;
            w.write_record(["id", "bucket", "score", "low_priority_emergency"])?;
            for a in &assignments {
                w.write_record([
                    a.id.to_string(),
                    a.bucket.to_string(),
                    a.score.to_string(),
                    a.low_priority_emergency.to_string(),
                ])?;
            }
            w.flush()?;
            write_ids(&d.join(POOL_IDS), &pool.ids())?;
            let summary = PoolSummary {
                quotas: pool.quotas,
                available: pool.available,
                taken: pool.taken,
                rules: sampler::rule_summary(),
                members: pool.members.clone(),
            };
            write_json(&d.join(POOL), &summary)?;
            Ok(StageOutput::files([ASSIGNMENTS.into(), POOL_IDS.into(), POOL.into()]).note("taken", pool.taken))
        },
    )?;

    if last <= Stage::Sample {
        return Ok(run.manifest);
    }

    run.stage("split", json!({ "pool": run.digest(POOL_IDS), "plan": plan }), |d| {
        let splits = split_pool(&read_ids(&d.join(POOL_IDS))?, &plan)?;
        fs::create_dir_all(d.join("split"))?;
        write_ids(&d.join(SILVER_IDS), &splits.silver)?;
        write_ids(&d.join(GOLD_IDS), &splits.gold)?;
        write_ids(&d.join(FEWSHOT_IDS), &splits.fewshot)?;
        Ok(StageOutput::files([SILVER_IDS.into(), GOLD_IDS.into(), FEWSHOT_IDS.into()]))
    })?;

    if last <= Stage::Split {
        return Ok(run.manifest);
    }

    let gold_label_digest = file_digest(&cfg.labels.gold).map_err(|e| run.fail("evaluate", e.into()))?;
    let mut prediction_files: Vec<String> = Vec::new();

    if let Some(b) = &cfg.baseline {
        let out = prediction_path(&b.name);
        let inputs = json!({
            "kept": run.digest(KEPT),
            "silver": run.digest(SILVER_IDS),
            "gold": run.digest(GOLD_IDS),
            "labels": opt_digest(cfg.labels.silver.as_ref()).map_err(|e| run.fail("train", e))?,
            "baseline": b,
        });
        run.stage("train", inputs, |d| {
            let records = read_canonical(&d.join(KEPT))?;
            let silver_ids = read_ids(&d.join(SILVER_IDS))?;
            let silver_path = cfg.labels.silver.as_ref().ok_or_else(|| anyhow!("labels.silver is not set"))?;
            let labels = labels_for(silver_path, &silver_ids)?;
            let examples: Vec<TrainingExample> = texts_for(&records, &silver_ids)?
                .into_iter()
                .map(|(id, text)| TrainingExample { id, text, label: labels[&id] })
                .collect();
            let mut subset = TrainingSubset::new(SplitRole::Silver, examples);
            if b.balanced {
                subset = subset.balanced()?;
            }
            let (cv, model) = select_and_fit(&b.grid(), &subset, b.folds)?;
            write_json(&d.join(BASELINE_MODEL), &model)?;
            write_json(&d.join(BASELINE_CV), &cv)?;
            let gold_ids = read_ids(&d.join(GOLD_IDS))?;
            let cases = texts_for(&records, &gold_ids)?;
            let mut set = predict_labels(&model, &b.name, cases.iter().map(|(id, t)| (*id, t.as_str())));
            set.gold_digest = Some(ids_digest(gold_ids.iter().copied()));
            set.meta.config_digest = file_digest(&d.join(BASELINE_MODEL))?;
            fs::create_dir_all(d.join("predictions"))?;
            write_predictions(&d.join(&out), &set)?;
            Ok(StageOutput::files([BASELINE_MODEL.into(), BASELINE_CV.into(), out.clone()])
                .note("training_examples", subset.examples().len())
                .note("training_digest", subset.digest())
                .note("iterations", model.logreg.meta.iterations)
                .note("converged", model.logreg.meta.converged))
        })?;
        prediction_files.push(out);
    }

    if last <= Stage::Train {
        return Ok(run.manifest);
    }

    let template = load_template(cfg).map_err(|e| run.fail("demos", e))?;
    let needs_demos = cfg.models.iter().any(|m| m.settings.iter().any(|&s| s > 0));
    if needs_demos {
        let inputs = json!({
            "kept": run.digest(KEPT),
            "fewshot": run.digest(FEWSHOT_IDS),
            "labels": opt_digest(cfg.labels.fewshot.as_ref()).map_err(|e| run.fail("demos", e))?,
            "configured": cfg.prompt.demos,
        });
        run.stage("demos", inputs, |d| {
            let records = read_canonical(&d.join(KEPT))?;
            let ids = read_ids(&d.join(FEWSHOT_IDS))?;
            let path = cfg.labels.fewshot.as_ref().ok_or_else(|| anyhow!("labels.fewshot is not set"))?;
            let labels = labels_for(path, &ids)?;
            let pool: Vec<LabeledExample> = texts_for(&records, &ids)?
                .into_iter()
                .map(|(id, text)| LabeledExample { id, text, label: labels[&id] })
                .collect();
            let mut sets = DemoSets::new();
            for setting in [PromptSetting::FourShot, PromptSetting::TwelveShot] {
                let wanted = cfg.models.iter().any(|m| m.prompt_settings().contains(&setting));
                if wanted {
                    let per_class = setting.per_class().expect("prompted setting");
                    sets.insert(setting, select_demonstrations(&pool, per_class, &cfg.prompt.demos)?);
                }
            }
            write_json(&d.join(DEMOS), &sets)?;
            Ok(StageOutput::files([DEMOS.into()]))
        })?;
    }

    let cache = if cfg.models.is_empty() {
        None
    } else {
        Some(ResponseCache::open(cfg.cache_dir()).map_err(|e| run.fail("classify", e.into()))?)
    };
    for m in &cfg.models {
        let stage = format!("classify:{}", m.name);
        let outs: Vec<(PromptSetting, String)> = m
            .prompt_settings()
            .into_iter()
            .map(|s| (s, prediction_path(&format!("{}/{}", m.name, s))))
            .collect();
        let inputs = json!({
            "kept": run.digest(KEPT),
            "gold": run.digest(GOLD_IDS),
            "demos": run.digest(DEMOS),
            "backend": m.backend.output_digest(),
            "settings": m.settings,
            "template": sha256_hex(template.text.as_bytes()),
            "template_version": template.version,
            "placement": cfg.prompt.placement,
        });
        run.stage(&stage, inputs, |d| {
            let records = read_canonical(&d.join(KEPT))?;
            let gold_ids = read_ids(&d.join(GOLD_IDS))?;
            let cases = texts_for(&records, &gold_ids)?;
            let demo_sets: DemoSets = if d.join(DEMOS).exists() { read_json(&d.join(DEMOS))? } else { DemoSets::new() };
            let backend = make_backend(&m.backend)?;
            fs::create_dir_all(d.join("predictions"))?;
            let mut out = StageOutput::default();
            for (setting, path) in &outs {
                let demos = demo_sets.get(setting).map(Vec::as_slice).unwrap_or(&[]);
                let spec = JobSpec {
                    model_name: &m.name,
                    setting: *setting,
                    template: &template,
                    demos,
                    placement: cfg.prompt.placement,
                    parallelism: m.parallelism,
                };
                let started = unix_now();
                let (set, stats) = run_classification_job(backend.as_ref(), &m.backend, &spec, &cases, cache.as_ref())?;
                write_predictions(&d.join(path), &set)?;
                out.files.push(path.clone());
                out = out.note(
                    setting.as_str(),
                    json!({
                        "requests": stats.requests,
                        "cache_hits": stats.cache_hits,
                        "transport_failures": stats.transport_failures,
                        "parse_failures": set.failure_count(),
                        "started_unix": started,
                        "finished_unix": unix_now(),
                    }),
                );
            }
            Ok(out)
        })?;
        prediction_files.extend(outs.into_iter().map(|(_, p)| p));
    }

    if last <= Stage::Classify {
        return Ok(run.manifest);
    }

    for e in &cfg.external {
        let out = prediction_path(&e.name);
        let inputs = json!({
            "file": file_digest(&e.path).map_err(|err| run.fail("ingest", err.into()))?,
            "gold": run.digest(GOLD_IDS),
        });
        run.stage(&format!("ingest:{}", e.name), inputs, |d| {
            let gold_ids = read_ids(&d.join(GOLD_IDS))?;
            let set = ingest_prediction_file(&e.path, &e.name, &gold_ids)?;
            fs::create_dir_all(d.join("predictions"))?;
            write_predictions(&d.join(&out), &set)?;
            Ok(StageOutput::files([out.clone()]).note("parse_failures", set.failure_count()))
        })?;
        prediction_files.push(out);
    }

    if last <= Stage::Ingest {
        return Ok(run.manifest);
    }

    let pred_digests: Vec<String> = prediction_files.iter().map(|p| run.digest(p)).collect();
    let inputs = json!({
        "gold_labels": gold_label_digest,
        "gold": run.digest(GOLD_IDS),
        "predictions": pred_digests,
        "bootstrap": boot,
        "second_annotator": opt_digest(cfg.labels.second_annotator.as_ref()).map_err(|e| run.fail("evaluate", e))?,
    });
    run.stage("evaluate", inputs, |d| {
        let gold_ids = read_ids(&d.join(GOLD_IDS))?;
        let gold = labels_for(&cfg.labels.gold, &gold_ids)?;
        let sets = prediction_files
            .iter()
            .map(|p| read_predictions(&d.join(p)).with_context(|| format!("reading {p}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let reports = sets
            .iter()
            .map(|s| evaluate_set(&gold, s, boot).with_context(|| s.config_name()))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let mut comparisons = Vec::new();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                comparisons.push(compare_sets(&gold, &sets[i], &sets[j])?);
            }
        }
        write_json(&d.join(REPORTS), &reports)?;
        write_json(&d.join(COMPARISONS), &comparisons)?;
        let mut out = StageOutput::files([REPORTS.into(), COMPARISONS.into()]);
        if let Some(p) = &cfg.labels.second_annotator {
            write_json(&d.join(AGREEMENT), &agreement(&gold, &read_gold(p)?)?)?;
            out.files.push(AGREEMENT.into());
        }
        Ok(out)
    })?;

    if last <= Stage::Evaluate {
        return Ok(run.manifest);
    }

    let inputs = json!({
        "gold_labels": gold_label_digest,
        "gold": run.digest(GOLD_IDS),
        "predictions": prediction_files.iter().map(|p| run.digest(p)).collect::<Vec<_>>(),
        "pairs": cfg.evaluation.pairs,
        "bootstrap": boot,
    });
    run.stage("consensus", inputs, |d| {
        let gold_ids = read_ids(&d.join(GOLD_IDS))?;
        let gold = labels_for(&cfg.labels.gold, &gold_ids)?;
        let sets: BTreeMap<String, PredictionSet> = prediction_files
            .iter()
            .map(|p| read_predictions(&d.join(p)).map(|s| (s.config_name(), s)).with_context(|| format!("reading {p}")))
            .collect::<anyhow::Result<_>>()?;
        let names = cfg.configuration_names();
        let pairs: Vec<(String, String)> = if cfg.evaluation.pairs.is_empty() {
            let mut v = Vec::new();
            for i in 0..names.len() {
                for j in i + 1..names.len() {
                    v.push((names[i].clone(), names[j].clone()));
                }
            }
            v
        } else {
            cfg.evaluation.pairs.iter().map(|[a, b]| (a.clone(), b.clone())).collect()
        };
        let refs: Vec<(&PredictionSet, &PredictionSet)> = pairs.iter().map(|(a, b)| (&sets[a], &sets[b])).collect();
        let rows: Vec<PairRow> = pair_sweep(&gold, &refs, boot)?;
        write_json(&d.join(PAIRS), &rows)?;
        Ok(StageOutput::files([PAIRS.into()]).note("pairs", rows.len()))
    })?;

    if last <= Stage::Consensus {
        return Ok(run.manifest);
    }

    let inputs = json!({
        "reports": run.digest(REPORTS),
        "comparisons": run.digest(COMPARISONS),
        "pairs": run.digest(PAIRS),
    });
    run.stage("report", inputs, |d| {
        let reports: Vec<EvaluationReport> = read_json(&d.join(REPORTS))?;
        let comparisons: Vec<Comparison> = read_json(&d.join(COMPARISONS))?;
        let pairs: Vec<PairRow> = read_json(&d.join(PAIRS))?;
        let written = emit_report(&d.join(REPORT_DIR), &reports, &comparisons, &pairs)?;
        Ok(StageOutput::files(
            written.into_iter().map(|p| format!("{REPORT_DIR}/{}", p.display())),
        ))
    })?;

    Ok(run.manifest)
}

/// Cohen's kappa between the reference labels and a second annotation,
/// over the ids both cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub n: usize,
    pub kappa: Option<f64>,
    pub raw_agreement: f64,
}

pub fn agreement(gold: &GoldLabels, other: &GoldLabels) -> anyhow::Result<Agreement> {
    let (a, b): (Vec<_>, Vec<_>) = gold.iter().filter_map(|(id, g)| other.get(id).map(|o| (*g, *o))).unzip();
    if a.is_empty() {
        bail!("second annotation shares no ids with the gold split");
    }
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    Ok(Agreement {
        n: a.len(),
        kappa: cohens_kappa(&a, &b)?,
        raw_agreement: same as f64 / a.len() as f64,
    })
}
