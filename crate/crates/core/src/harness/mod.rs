//! Corpus retrieval, preprocessing, randomized run plans and campaign
//! execution with durable JSON Lines records.

mod corpus;
mod env;
mod execute;
mod fetch;
mod manifest;
mod plan;
mod preprocess;
mod timescale;

use std::path::PathBuf;

use thiserror::Error;

pub use corpus::{generate_corpus, CorpusFile, MINI_CORPUS_SIZES};
pub use env::Environment;
pub use execute::{execute, load_campaign, Campaign, CampaignHeader, ExecuteOptions, ExecuteSummary};
pub use fetch::{fetch_corpus, Availability, FetchOptions, FetchReport, FetchStatus};
pub use manifest::{CorpusManifest, ManifestEntry};
pub use plan::{build_plan, Combo, RunPlan, XorShift64Star};
pub use preprocess::{preprocess, preprocess_corpus, Preprocessed};
pub use timescale::apply_time_scale;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("plan error: {0}")]
    Plan(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Campaign { path: PathBuf, message: String },
    /// Persisting a record failed; rerunning the same command resumes at
    /// `next_ordinal`.
    #[error("storage failure before run {next_ordinal}: {source}")]
    Storage {
        next_ordinal: u64,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Xml(#[from] crate::xml::XmlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
