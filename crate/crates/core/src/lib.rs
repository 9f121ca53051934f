//! Core building blocks for benchmarking four-class actionable triage of
//! patient-authored medical inquiries.
//!
//! Everything in this crate is pure computation over in-memory data: corpus
//! quality filtering, keyword-stratified sampling and split construction,
//! prompt assembly, structured-output parsing, a TF-IDF + multinomial
//! logistic-regression baseline, safety-aware metrics with bootstrap
//! intervals, McNemar tests, and two-model consensus / oracle-HITL analysis.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, network backends
//! and the command line live in the `triage-bench` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod baseline;
pub mod consensus;
pub mod digest;
pub mod evaluation;
pub mod filter;
pub mod label;
pub mod metrics;
pub mod parse;
pub mod predictions;
pub mod prompt;
pub mod rng;
pub mod sampler;

pub use filter::{quality_filter, ExclusionReason, FilterConfig, FilterOutcome, InquiryRecord};
pub use label::{Confidence, Severity, TriageLabel};
pub use parse::{
    normalize_label, parse_structured_output, FailureReason, ParseFailure, PredictionOutcome,
    StructuredPrediction,
};
pub use predictions::{GoldLabels, PredictionSet, PromptSetting, RecordId};
