//! Experiment configuration (TOML). Relative paths resolve against the
//! directory of the config file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triage_core::baseline::{BaselineConfig, LogRegConfig, DEFAULT_MAX_FEATURES};
use triage_core::digest::sha256_hex;
use triage_core::metrics::BootstrapConfig;
use triage_core::prompt::DemoPlacement;
use triage_core::sampler::{BucketCounts, KeywordLists, SamplingPlan, SplitSizes};
use triage_core::{FilterConfig, PromptSetting, RecordId, TriageLabel};

use crate::corpus::{CorpusColumns, CorpusFormat};
use crate::gateway::{BackendConfig, BackendKind, DEFAULT_PARALLELISM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    /// Response cache; defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub filter: FilterConfig,
    pub sampling: SamplingSection,
    pub labels: LabelsSection,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default)]
    pub baseline: Option<BaselineSection>,
    #[serde(default)]
    pub models: Vec<ModelSection>,
    #[serde(default)]
    pub external: Vec<ExternalSection>,
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    #[serde(default)]
    pub format: Option<CorpusFormat>,
    #[serde(default)]
    pub columns: CorpusColumns,
}

impl CorpusSection {
    pub fn format(&self) -> CorpusFormat {
        self.format.unwrap_or_else(|| CorpusFormat::from_path(&self.path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(default = "default_caps")]
    pub caps: BucketCounts,
    pub pool_size: usize,
    pub split: SplitSizes,
    pub seed: u64,
    /// Keyword override file; sections it names replace the defaults.
    #[serde(default)]
    pub keywords: Option<PathBuf>,
}

fn default_caps() -> BucketCounts {
    SamplingPlan::default().caps
}

impl SamplingSection {
    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan {
            caps: self.caps,
            pool_size: self.pool_size,
            split_sizes: self.split,
            seed: self.seed,
        }
    }

    pub fn keyword_lists(&self) -> anyhow::Result<KeywordLists> {
        let base = KeywordLists::default();
        match &self.keywords {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
                Ok(base.with_overrides(&text).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?)
            }
            None => Ok(base),
        }
    }
}

/// Label files keyed by record id; one file may serve several roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsSection {
    pub silver: Option<PathBuf>,
    pub gold: PathBuf,
    pub fewshot: Option<PathBuf>,
    /// Independent annotation of (part of) the gold split, for agreement.
    #[serde(default)]
    pub second_annotator: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    /// Custom template file; the built-in prompt otherwise.
    pub template: Option<PathBuf>,
    pub template_version: Option<String>,
    pub placement: DemoPlacement,
    /// Preferred demonstration ids per class.
    pub demos: BTreeMap<TriageLabel, Vec<RecordId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub name: String,
    /// Downsample the silver split to the smallest class size.
    pub balanced: bool,
    pub folds: usize,
    pub l2_grid: Vec<f64>,
    pub max_features: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let lr = LogRegConfig::default();
        Self {
            name: "tfidf-logreg".into(),
            balanced: true,
            folds: 5,
            l2_grid: vec![lr.l2_strength],
            max_features: DEFAULT_MAX_FEATURES,
            max_iter: lr.max_iter,
            tol: lr.tol,
        }
    }
}

impl BaselineSection {
    pub fn grid(&self) -> Vec<BaselineConfig> {
        self.l2_grid
            .iter()
            .map(|&l2| BaselineConfig {
                max_features: self.max_features,
                logreg: LogRegConfig {
                    l2_strength: l2,
                    max_iter: self.max_iter,
                    tol: self.tol,
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub backend: BackendConfig,
    /// Shots per run: any of 0, 4, 12.
    #[serde(default = "default_settings")]
    pub settings: Vec<usize>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_settings() -> Vec<usize> {
    vec![0, 4, 12]
}

fn default_parallelism() -> usize {
    DEFAULT_PARALLELISM
}

impl ModelSection {
    pub fn prompt_settings(&self) -> Vec<PromptSetting> {
        self.settings.iter().filter_map(|&s| PromptSetting::from_shots(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSection {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
    /// Configuration pairs for the consensus sweep; all pairs when empty.
    #[serde(default)]
    pub pairs: Vec<[String; 2]>,
}

fn default_replicates() -> usize {
    BootstrapConfig::default().replicates
}

impl EvaluationSection {
    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.replicates,
            seed: self.seed,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("config is invalid:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// A parsed config plus the digest of the file it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub digest: String,
    pub source: PathBuf,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ExperimentConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(LoadedConfig {
            config,
            digest: sha256_hex(text.as_bytes()),
            source: path.to_path_buf(),
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output_dir);
        if let Some(c) = &mut self.cache_dir {
            resolve(base, c);
        }
        resolve(base, &mut self.corpus.path);
        if let Some(k) = &mut self.sampling.keywords {
            resolve(base, k);
        }
        for p in [&mut self.labels.silver, &mut self.labels.fewshot, &mut self.labels.second_annotator]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        resolve(base, &mut self.labels.gold);
        if let Some(t) = &mut self.prompt.template {
            resolve(base, t);
        }
        for e in &mut self.external {
            resolve(base, &mut e.path);
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    /// Report names of every configuration, in roster order.
    pub fn configuration_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(b) = &self.baseline {
            out.push(b.name.clone());
        }
        for m in &self.models {
            for s in m.prompt_settings() {
                out.push(format!("{}/{}", m.name, s));
            }
        }
        out.extend(self.external.iter().map(|e| e.name.clone()));
        out
    }

    /// Checks everything that can be checked before any stage runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut need_file = |what: &str, p: &Path| {
            if !p.is_file() {
                problems.push(format!("{what} {} does not exist", p.display()));
            }
        };
        need_file("corpus", &self.corpus.path);
        need_file("gold labels", &self.labels.gold);
        if let Some(p) = &self.labels.silver {
            need_file("silver labels", p);
        }
        if let Some(p) = &self.labels.fewshot {
            need_file("few-shot labels", p);
        }
        if let Some(p) = &self.labels.second_annotator {
            need_file("second-annotator labels", p);
        }
        if let Some(p) = &self.sampling.keywords {
            need_file("keyword file", p);
        }
        if let Some(p) = &self.prompt.template {
            need_file("prompt template", p);
        }
        for e in &self.external {
            need_file(&format!("prediction file for {:?}", e.name), &e.path);
        }

        if let Err(e) = self.filter.validate() {
            problems.push(format!("filter: {e}"));
        }
        if let Err(e) = self.sampling.plan().validate() {
            problems.push(format!("sampling: {e}"));
        }
        if self.sampling.keywords.as_ref().is_some_and(|p| p.is_file()) {
            if let Err(e) = self.sampling.keyword_lists() {
                problems.push(format!("keywords: {e}"));
            }
        }
        if let Some(b) = &self.baseline {
            if self.labels.silver.is_none() {
                problems.push("baseline needs labels.silver".into());
            }
            if b.folds < 2 {
                problems.push("baseline.folds must be at least 2".into());
            }
            if b.l2_grid.is_empty() || b.l2_grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                problems.push("baseline.l2_grid must be non-empty and non-negative".into());
            }
            if b.max_features == 0 {
                problems.push("baseline.max_features must be positive".into());
            }
        }
        for m in &self.models {
            if let Err(e) = m.backend.validate() {
                problems.push(format!("model {:?}: {e}", m.name));
            }
            if m.backend.kind != BackendKind::Stub {
                if let Some(var) = &m.backend.api_key_env {
                    if std::env::var_os(var).is_none() {
                        problems.push(format!("model {:?}: environment variable {var} is not set", m.name));
                    }
                }
            }
            if m.settings.is_empty() || m.settings.iter().any(|s| PromptSetting::from_shots(*s).is_none()) {
                problems.push(format!("model {:?}: settings must be drawn from 0, 4, 12", m.name));
            }
            if m.settings.iter().any(|&s| s > 0) && self.labels.fewshot.is_none() {
                problems.push(format!("model {:?}: few-shot settings need labels.fewshot", m.name));
            }
            if m.parallelism == 0 {
                problems.push(format!("model {:?}: parallelism must be positive", m.name));
            }
        }
        let mut seen = BTreeSet::new();
        let names = self
            .baseline
            .iter()
            .map(|b| &b.name)
            .chain(self.models.iter().map(|m| &m.name))
            .chain(self.external.iter().map(|e| &e.name));
        for n in names {
            if !valid_name(n) {
                problems.push(format!("name {n:?} may only use letters, digits, '.', '_' and '-'"));
            }
            if !seen.insert(n.clone()) {
                problems.push(format!("name {n:?} is used twice"));
            }
        }
        let configs: BTreeSet<String> = self.configuration_names().into_iter().collect();
        if configs.is_empty() {
            problems.push("nothing to evaluate: add a baseline, a model or an external prediction file".into());
        }
        for [a, b] in &self.evaluation.pairs {
            for n in [a, b] {
                if !configs.contains(n) {
                    problems.push(format!("evaluation.pairs: unknown configuration {n:?}"));
                }
            }
        }
        if self.evaluation.replicates == 0 {
            problems.push("evaluation.replicates must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}
