use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::digest;

pub const DEFAULT_MAX_FEATURES: usize = 5000;

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        self.indices
            .binary_search(&index)
            .map(|p| self.values[p])
            .unwrap_or(0.0)
    }
}

/// Lowercased alphanumeric runs of at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(String::from)
        .collect()
}

/// Unigrams followed by adjacent-pair bigrams joined with one space.
pub fn features(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let mut out = tokens.clone();
    out.extend(tokens.windows(2).map(|w| alloc::format!("{} {}", w[0], w[1])));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Terms in column order (lexicographic).
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub n_documents: usize,
    pub max_features: usize,
    /// Digest of the exact texts the model was fitted on.
    pub fit_corpus_digest: String,
    #[serde(skip)]
    vocabulary: BTreeMap<String, usize>,
}

/// Digest of a document list, order-sensitive.
pub fn corpus_digest(texts: &[&str]) -> String {
    let parts: Vec<&[u8]> = texts.iter().map(|t| t.as_bytes()).collect();
    digest::sha256_hex_parts(&parts)
}

impl TfidfModel {
    /// Smoothed idf `ln((1+N)/(1+df)) + 1`. When there are more candidate
    /// features than `max_features`, the most frequent by document frequency
    /// are kept, ties broken lexicographically.
    pub fn fit(texts: &[&str], max_features: usize) -> Result<Self, BaselineError> {
        if texts.iter().all(|t| t.trim().is_empty()) {
            return Err(BaselineError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            let mut feats = features(text);
            feats.sort_unstable();
            feats.dedup();
            for f in feats {
                *df.entry(f).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(BaselineError::EmptyVocabulary);
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        if ranked.len() > max_features {
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(max_features);
            ranked.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let n = texts.len() as f64;
        let idf = ranked
            .iter()
            .map(|(_, d)| libm::log((1.0 + n) / (1.0 + *d as f64)) + 1.0)
            .collect();
        let terms: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
        let mut model = TfidfModel {
            terms,
            idf,
            n_documents: texts.len(),
            max_features,
            fit_corpus_digest: corpus_digest(texts),
            vocabulary: BTreeMap::new(),
        };
        model.rebuild_index();
        Ok(model)
    }

    /// Restores the term lookup after deserialization.
    pub fn rebuild_index(&mut self) {
        self.vocabulary = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    /// Raw counts times idf, l2-normalized when nonzero.
    pub fn vectorize(&self, text: &str) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for f in features(text) {
            if let Some(&col) = self.vocabulary.get(&f) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut v = SparseVec {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(c, tf)| tf * self.idf[*c]).collect(),
        };
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}
