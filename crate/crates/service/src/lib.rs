//! Command-line and HTTP front end for `sciqa-core`: index persistence,
//! configuration, the `ingest`/`query`/`eval` verbs and the REST server.

pub mod cli;
pub mod config;
pub mod http;
pub mod snapshot;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ReaderMode, ScorerMode, ServiceConfig};
pub use snapshot::{Manifest, Snapshot, SnapshotError, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no index found in {} (run `sciqa ingest` first or set SCIQA_INDEX_DIR)", .0.display())]
    NoIndex(PathBuf),
    #[error(
        "nothing to index: {rejected} rows rejected, {filtered} articles outside the date window"
    )]
    NothingToIndex { rejected: usize, filtered: usize },
    #[error("dataset is invalid:\n  {}", .0.join("\n  "))]
    InvalidDataset(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Corpus(#[from] sciqa_core::corpus::CorpusError),
    #[error(transparent)]
    Reader(#[from] sciqa_core::reader::ReaderError),
    #[error(transparent)]
    Pipeline(#[from] sciqa_core::pipeline::PipelineError),
    #[error(transparent)]
    Squad(#[from] sciqa_core::squad::SquadError),
    #[error(transparent)]
    Eval(#[from] sciqa_core::eval::EvalError),
}
