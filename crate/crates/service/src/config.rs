//! Runtime configuration shared by the CLI verbs and the HTTP server.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use sciqa_core::eval::{RemoteScorer, SemanticScorer, TokenF1Scorer};
use sciqa_core::pipeline::Pipeline;
use sciqa_core::reader::{BaselineReader, Reader, ReaderConfig, RemoteReader};

use crate::snapshot::Snapshot;
use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReaderMode {
    #[default]
    Baseline,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScorerMode {
    #[default]
    TokenF1,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub index_dir: PathBuf,
    pub listen_address: SocketAddr,
    pub retriever_top_k: usize,
    pub reader_top_k: usize,
    pub reader_mode: ReaderMode,
    pub remote_reader_url: Option<String>,
    pub scorer_mode: ScorerMode,
    pub remote_scorer_url: Option<String>,
    pub remote_timeout: Duration,
    pub reader: ReaderConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            index_dir: PathBuf::from("index"),
            listen_address: SocketAddr::from(([127, 0, 0, 1], 8080)),
            retriever_top_k: 10,
            reader_top_k: 5,
            reader_mode: ReaderMode::Baseline,
            remote_reader_url: None,
            scorer_mode: ScorerMode::TokenF1,
            remote_scorer_url: None,
            remote_timeout: Duration::from_secs(10),
            reader: ReaderConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.retriever_top_k == 0 || self.reader_top_k == 0 {
            return Err(ServiceError::Config(
                "top-k defaults must be at least 1".into(),
            ));
        }
        if self.reader_mode == ReaderMode::Remote && self.remote_reader_url.is_none() {
            return Err(ServiceError::Config(
                "remote reader mode needs a reader URL".into(),
            ));
        }
        if self.scorer_mode == ScorerMode::Remote && self.remote_scorer_url.is_none() {
            return Err(ServiceError::Config(
                "remote scorer mode needs a scorer URL".into(),
            ));
        }
        if self.remote_timeout.is_zero() {
            return Err(ServiceError::Config(
                "remote timeout must be positive".into(),
            ));
        }
        self.reader
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Wires the default retriever -> reader pipeline over a loaded index.
    pub fn pipeline(&self, snapshot: Snapshot) -> Result<Pipeline, ServiceError> {
        self.validate()?;
        let model = Arc::new(snapshot.model);
        let store = Arc::new(snapshot.store);
        let reader: Arc<dyn Reader> = match self.reader_mode {
            ReaderMode::Baseline => Arc::new(BaselineReader::new(model.clone(), self.reader)?),
            ReaderMode::Remote => {
                let url = self.remote_reader_url.as_deref().unwrap_or_default();
                Arc::new(RemoteReader::new(
                    url,
                    self.remote_timeout,
                    model.clone(),
                    self.reader,
                )?)
            }
        };
        let pipeline = Pipeline::build_default(model, store, reader);
        pipeline.validate()?;
        Ok(pipeline)
    }

    pub fn scorer(&self) -> Box<dyn SemanticScorer> {
        match (self.scorer_mode, &self.remote_scorer_url) {
            (ScorerMode::Remote, Some(url)) => {
                Box::new(RemoteScorer::new(url, self.remote_timeout))
            }
            _ => Box::new(TokenF1Scorer),
        }
    }
}
