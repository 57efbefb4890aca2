//! Retriever-reader extractive question answering over a publication corpus.
//!
//! Documents are cleaned and split into token-window passages
//! ([`corpus`]), indexed with TF-IDF ([`retriever`]), and read by a span
//! extractor ([`reader`]). [`pipeline`] chains the two stages and shapes
//! the answer rows; [`squad`] and [`eval`] cover datasets and metrics.

pub mod corpus;
pub mod eval;
pub mod pipeline;
pub mod reader;
pub mod retriever;
pub mod squad;
pub mod text;

pub use corpus::{clean_text, Document, DocumentStore, Meta, Passage, RawArticle, SplitConfig};
pub use eval::{evaluate, EvalReport, SemanticScorer, TokenF1Scorer};
pub use pipeline::{Pipeline, QueryRequest, ResultRow};
pub use reader::{Answer, AnswerType, BaselineReader, Offsets, Reader, ReaderConfig, RemoteReader};
pub use retriever::{RetrievedDocument, TfIdfModel};
pub use squad::{Qrels, SquadDataset, SquadExample};
