//! File formats, model backends and the experiment pipeline around `triage-core`.

pub mod config;
pub mod corpus;
pub mod gateway;
pub mod labels;
pub mod manifest;
pub mod pipeline;
pub mod predio;
pub mod report;
pub mod synthetic;

pub use triage_core;
