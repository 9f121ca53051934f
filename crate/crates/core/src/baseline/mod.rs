//! TF-IDF + multinomial logistic-regression baseline with balanced
//! downsampling and stratified cross-validation.
//!
//! Fitting entry points take a [`TrainingSubset`], which records the split it
//! came from; anything but the silver split is refused.

mod logreg;
mod tfidf;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::label::TriageLabel;
use crate::metrics::{scores_from_cases, Case};
use crate::predictions::{PredictionSet, PromptSetting, RecordId};

pub use logreg::{loss, loss_and_gradient, param_len, train_logreg, LogRegConfig, LogRegModel, TrainingMeta};
pub use tfidf::{corpus_digest, features, tokenize, SparseVec, TfidfModel, DEFAULT_MAX_FEATURES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("training corpus has no non-empty document")]
    EmptyCorpus,
    #[error("training corpus yields no features")]
    EmptyVocabulary,
    #[error("{0} feature vectors but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least 4 training samples, got {0}")]
    TooFewSamples(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("feature index out of range")]
    FeatureOutOfRange,
    #[error("class `{0}` has no examples")]
    EmptyClass(TriageLabel),
    #[error("class `{label}` has {count} examples, fewer than {folds} folds")]
    TooFewForFolds { label: TriageLabel, count: usize, folds: usize },
    #[error("refusing to fit on the {0} split")]
    Leakage(SplitRole),
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("need at least 2 folds")]
    TooFewFolds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Silver,
    Gold,
    Fewshot,
}

impl core::fmt::Display for SplitRole {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SplitRole::Silver => "silver",
            SplitRole::Gold => "gold",
            SplitRole::Fewshot => "fewshot",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: RecordId,
    pub text: String,
    pub label: TriageLabel,
}

/// Labeled examples tagged with the split they were drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSubset {
    role: SplitRole,
    examples: Vec<TrainingExample>,
}

impl TrainingSubset {
    pub fn new(role: SplitRole, examples: Vec<TrainingExample>) -> Self {
        Self { role, examples }
    }

    pub fn role(&self) -> SplitRole {
        self.role
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    pub fn digest(&self) -> String {
        let texts: Vec<&str> = self.examples.iter().map(|e| e.text.as_str()).collect();
        corpus_digest(&texts)
    }

    fn fit_guard(&self) -> Result<(), BaselineError> {
        match self.role {
            SplitRole::Silver => Ok(()),
            other => Err(BaselineError::Leakage(other)),
        }
    }

    /// Balanced copy: every class cut to the smallest class count, lowest ids kept.
    pub fn balanced(&self) -> Result<TrainingSubset, BaselineError> {
        Ok(TrainingSubset {
            role: self.role,
            examples: balanced_downsample(&self.examples)?,
        })
    }
}

pub fn balanced_downsample(examples: &[TrainingExample]) -> Result<Vec<TrainingExample>, BaselineError> {
    let mut by_class: BTreeMap<TriageLabel, Vec<&TrainingExample>> = BTreeMap::new();
    for e in examples {
        by_class.entry(e.label).or_default().push(e);
    }
    for label in TriageLabel::ALL {
        if !by_class.contains_key(&label) {
            return Err(BaselineError::EmptyClass(label));
        }
    }
    let per_class = by_class.values().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::with_capacity(per_class * TriageLabel::COUNT);
    for members in by_class.values_mut() {
        members.sort_by_key(|e| e.id);
        out.extend(members.iter().take(per_class).map(|e| (*e).clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub max_features: usize,
    #[serde(flatten)]
    pub logreg: LogRegConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_features: DEFAULT_MAX_FEATURES,
            logreg: LogRegConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub config: BaselineConfig,
    pub tfidf: TfidfModel,
    pub logreg: LogRegModel,
}

fn fit_examples(examples: &[TrainingExample], cfg: &BaselineConfig) -> Result<BaselineModel, BaselineError> {
    let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
    let tfidf = TfidfModel::fit(&texts, cfg.max_features)?;
    let x: Vec<SparseVec> = texts.iter().map(|t| tfidf.vectorize(t)).collect();
    let y: Vec<TriageLabel> = examples.iter().map(|e| e.label).collect();
    let logreg = train_logreg(&x, &y, tfidf.len(), &cfg.logreg)?;
    Ok(BaselineModel {
        config: *cfg,
        tfidf,
        logreg,
    })
}

pub fn fit_baseline(subset: &TrainingSubset, cfg: &BaselineConfig) -> Result<BaselineModel, BaselineError> {
    subset.fit_guard()?;
    fit_examples(&subset.examples, cfg)
}

impl BaselineModel {
    pub fn predict_text(&self, text: &str) -> TriageLabel {
        self.logreg.predict(&self.tfidf.vectorize(text))
    }

    /// Restores lookup tables after deserialization.
    pub fn rebuild_index(&mut self) {
        self.tfidf.rebuild_index();
    }
}

/// Predicts every case; a native classifier never fails to parse.
pub fn predict_labels<'a>(
    model: &BaselineModel,
    model_name: &str,
    cases: impl IntoIterator<Item = (RecordId, &'a str)>,
) -> PredictionSet {
    PredictionSet::from_labels(
        model_name,
        PromptSetting::External,
        cases.into_iter().map(|(id, text)| (id, model.predict_text(text))),
    )
}

/// Fold index per example. Within each class (in severity order) examples are
/// taken by ascending id and dealt round-robin, continuing the deal position
/// across classes so remainders spread over different folds.
pub fn stratified_folds(examples: &[TrainingExample], folds: usize) -> Result<Vec<usize>, BaselineError> {
    if folds < 2 {
        return Err(BaselineError::TooFewFolds);
    }
    let mut assignment = alloc::vec![0usize; examples.len()];
    let mut deal = 0usize;
    for label in TriageLabel::ALL {
        let mut members: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].label == label).collect();
        if members.len() < folds {
            return Err(BaselineError::TooFewForFolds {
                label,
                count: members.len(),
                folds,
            });
        }
        members.sort_by_key(|&i| examples[i].id);
        for i in members {
            assignment[i] = deal % folds;
            deal += 1;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub grid: Vec<BaselineConfig>,
    /// `fold_scores[candidate][fold]`, macro-F1 on the held-out fold.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    pub winner: usize,
}

impl CvSelection {
    pub fn winning_config(&self) -> &BaselineConfig {
        &self.grid[self.winner]
    }
}

/// Stratified k-fold selection by mean macro-F1; the earliest grid entry wins ties.
pub fn cv_select(grid: &[BaselineConfig], subset: &TrainingSubset, folds: usize) -> Result<CvSelection, BaselineError> {
    subset.fit_guard()?;
    if grid.is_empty() {
        return Err(BaselineError::EmptyGrid);
    }
    let examples = subset.examples();
    let assignment = stratified_folds(examples, folds)?;
    let mut fold_scores = Vec::with_capacity(grid.len());
    for cfg in grid {
        let mut scores = Vec::with_capacity(folds);
        for fold in 0..folds {
            let train: Vec<TrainingExample> = examples
                .iter()
                .zip(&assignment)
                .filter(|(_, f)| **f != fold)
                .map(|(e, _)| e.clone())
                .collect();
            let model = fit_examples(&train, cfg)?;
            let held: Vec<Case> = examples
                .iter()
                .zip(&assignment)
                .filter(|(_, f)| **f == fold)
                .map(|(e, _)| Case {
                    gold: e.label,
                    pred: Some(model.predict_text(&e.text)),
                })
                .collect();
            scores.push(scores_from_cases(&held).map(|s| s.macro_f1).unwrap_or(0.0));
        }
        fold_scores.push(scores);
    }
    let mean_scores: Vec<f64> = fold_scores
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let mut winner = 0;
    for (i, m) in mean_scores.iter().enumerate() {
        if *m > mean_scores[winner] {
            winner = i;
        }
    }
    Ok(CvSelection {
        grid: grid.to_vec(),
        fold_scores,
        mean_scores,
        winner,
    })
}

/// CV selection followed by a refit of the winner on the whole subset.
pub fn select_and_fit(
    grid: &[BaselineConfig],
    subset: &TrainingSubset,
    folds: usize,
) -> Result<(CvSelection, BaselineModel), BaselineError> {
    let selection = cv_select(grid, subset, folds)?;
    let model = fit_baseline(subset, selection.winning_config())?;
    Ok((selection, model))
}
