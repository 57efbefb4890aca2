//! Retriever → reader composition as a validated DAG, and the result-row
//! schema returned to callers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{clean_text, DocumentStore, Meta};
use crate::reader::{Answer, Offsets, Reader, ReaderError, ReaderPassage};
use crate::retriever::{RetrievedDocument, RetrieverError, TfIdfModel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("the index is empty")]
    EmptyIndex,
    #[error("pipeline contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("dangling node {0:?}: {1}")]
    Dangling(String, String),
    #[error("invalid pipeline: {0}")]
    Invalid(String),
    #[error("stage {stage} failed: {source}")]
    Retriever {
        stage: String,
        #[source]
        source: RetrieverError,
    },
    #[error("stage {stage} failed: {source}")]
    Reader {
        stage: String,
        #[source]
        source: ReaderError,
    },
    #[error("stage {stage} produced an answer violating the offset law: {reason}")]
    OffsetLaw { stage: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub query: String,
    #[serde(default = "default_retriever_k")]
    pub retriever_top_k: usize,
    #[serde(default = "default_reader_k")]
    pub reader_top_k: usize,
}

fn default_retriever_k() -> usize {
    10
}

fn default_reader_k() -> usize {
    5
}

impl QueryRequest {
    pub fn new(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            retriever_top_k: default_retriever_k(),
            reader_top_k: default_reader_k(),
        }
    }

    pub fn with_k(mut self, retriever_top_k: usize, reader_top_k: usize) -> Self {
        self.retriever_top_k = retriever_top_k;
        self.reader_top_k = reader_top_k;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.retriever_top_k == 0 || self.reader_top_k == 0 {
            return Err(PipelineError::InvalidRequest(
                "top_k values must be at least 1".into(),
            ));
        }
        if clean_text(&self.query).is_empty() {
            return Err(PipelineError::InvalidRequest("query is empty".into()));
        }
        Ok(())
    }
}

/// One row of the answer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub index: usize,
    pub answer: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub score: f64,
    pub context: String,
    pub meta: Meta,
    pub offsets_in_document: Offsets,
    pub offsets_in_context: Offsets,
    pub doc_id: String,
    /// Retrieval score of the source document; used for re-ranking only.
    #[serde(skip)]
    pub retriever_score: f64,
}

impl ResultRow {
    pub fn is_no_answer(&self) -> bool {
        self.kind == "no_answer"
    }
}

/// Sorts rows by descending score, then descending retriever score, then
/// ascending doc id, keeping the original order among full ties, and
/// rewrites `index`.
pub fn rerank(mut rows: Vec<ResultRow>) -> Vec<ResultRow> {
    rows.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.retriever_score.total_cmp(&a.retriever_score))
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.index = i;
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Retriever,
    Reader,
    Reranker,
}

impl NodeKind {
    /// Whether the node consumes the output of another node (the retriever
    /// consumes the query itself).
    fn needs_input(self) -> bool {
        !matches!(self, NodeKind::Retriever)
    }

    fn accepts(self, upstream: NodeKind) -> bool {
        match self {
            NodeKind::Retriever => false,
            NodeKind::Reader => upstream == NodeKind::Retriever,
            NodeKind::Reranker => matches!(upstream, NodeKind::Reader | NodeKind::Reranker),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Execution plan over a retriever and a reader.
pub struct Pipeline {
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    model: Arc<TfIdfModel>,
    store: Arc<DocumentStore>,
    reader: Arc<dyn Reader>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("nodes", &self.nodes)
            .field("edges", &self.edges)
            .field("reader", &self.reader.name())
            .finish()
    }
}

/// Output of the retrieval stage.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub documents: Vec<RetrievedDocument>,
    pub passages: Vec<ReaderPassage>,
}

impl Pipeline {
    /// `Retriever -> Reader`.
    pub fn build_default(
        model: Arc<TfIdfModel>,
        store: Arc<DocumentStore>,
        reader: Arc<dyn Reader>,
    ) -> Self {
        Self {
            nodes: vec![
                Node {
                    name: "Retriever".into(),
                    kind: NodeKind::Retriever,
                },
                Node {
                    name: "Reader".into(),
                    kind: NodeKind::Reader,
                },
            ],
            edges: vec![("Retriever".into(), "Reader".into())],
            model,
            store,
            reader,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn store(&self) -> &Arc<DocumentStore> {
        &self.store
    }

    pub fn model(&self) -> &Arc<TfIdfModel> {
        &self.model
    }

    pub fn add_node(&mut self, name: impl Into<String>, kind: NodeKind) {
        self.nodes.push(Node {
            name: name.into(),
            kind,
        });
    }

    pub fn add_edge(&mut self, from: impl Into<String>, to: impl Into<String>) {
        self.edges.push((from.into(), to.into()));
    }

    /// Returns a new pipeline sharing the index but using another reader.
    pub fn with_reader(&self, reader: Arc<dyn Reader>) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            model: self.model.clone(),
            store: self.store.clone(),
            reader,
        }
    }

    /// Checks the graph and returns node names in execution order.
    pub fn validate(&self) -> Result<Vec<String>, PipelineError> {
        let mut kinds: HashMap<&str, NodeKind> = HashMap::new();
        for n in &self.nodes {
            if kinds.insert(n.name.as_str(), n.kind).is_some() {
                return Err(PipelineError::Invalid(format!(
                    "duplicate node name {:?}",
                    n.name
                )));
            }
        }
        let mut succ: BTreeMap<&str, Vec<&str>> = self
            .nodes
            .iter()
            .map(|n| (n.name.as_str(), vec![]))
            .collect();
        let mut preds: BTreeMap<&str, Vec<&str>> = succ.clone();
        for (from, to) in &self.edges {
            for end in [from, to] {
                if !kinds.contains_key(end.as_str()) {
                    return Err(PipelineError::Dangling(
                        end.clone(),
                        "edge references an unknown node".into(),
                    ));
                }
            }
            succ.get_mut(from.as_str()).unwrap().push(to);
            preds.get_mut(to.as_str()).unwrap().push(from);
        }

        if let Some(cycle) = find_cycle(&succ) {
            return Err(PipelineError::Cycle(cycle));
        }

        for n in &self.nodes {
            let incoming = &preds[n.name.as_str()];
            if n.kind.needs_input() && incoming.is_empty() {
                return Err(PipelineError::Dangling(
                    n.name.clone(),
                    "required input is not connected".into(),
                ));
            }
            if incoming.len() > 1 {
                return Err(PipelineError::Invalid(format!(
                    "node {:?} has more than one input",
                    n.name
                )));
            }
            if let Some(up) = incoming.first() {
                if !n.kind.accepts(kinds[up]) {
                    return Err(PipelineError::Invalid(format!(
                        "node {:?} cannot consume output of {:?}",
                        n.name, up
                    )));
                }
            }
        }
        let entries: Vec<&str> = self
            .nodes
            .iter()
            .filter(|n| preds[n.name.as_str()].is_empty())
            .map(|n| n.name.as_str())
            .collect();
        let exits: Vec<&Node> = self
            .nodes
            .iter()
            .filter(|n| succ[n.name.as_str()].is_empty())
            .collect();
        if entries.len() != 1 {
            return Err(PipelineError::Invalid(format!(
                "expected one entry node, found {entries:?}"
            )));
        }
        if exits.len() != 1 || exits[0].kind == NodeKind::Retriever {
            return Err(PipelineError::Invalid(
                "expected a single exit node producing answers".into(),
            ));
        }

        let mut order = Vec::with_capacity(self.nodes.len());
        let mut cur = Some(entries[0]);
        while let Some(name) = cur {
            order.push(name.to_string());
            cur = succ[name].first().copied();
        }
        if order.len() != self.nodes.len() {
            return Err(PipelineError::Invalid("graph is not a single chain".into()));
        }
        Ok(order)
    }

    /// Runs the retrieval stage only.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedDocument>, PipelineError> {
        if self.store.is_empty() || !self.model.is_fitted() {
            return Err(PipelineError::EmptyIndex);
        }
        self.model
            .retrieve_documents(&self.store, query, k)
            .map_err(|source| PipelineError::Retriever {
                stage: "Retriever".into(),
                source,
            })
    }

    /// Retrieves documents and selects at most `k` passages for reading:
    /// every retrieved document's best passage first, then the remaining
    /// passages by descending score.
    pub fn candidates(&self, query: &str, k: usize) -> Result<Candidates, PipelineError> {
        let documents = self.retrieve(query, k)?;
        let mut chosen: Vec<(&str, &str, f64)> = documents
            .iter()
            .map(|d| {
                (
                    d.doc_id.as_str(),
                    d.best_passages[0].0.as_str(),
                    d.best_passages[0].1,
                )
            })
            .collect();
        let mut rest: Vec<(&str, &str, f64)> = documents
            .iter()
            .flat_map(|d| {
                d.best_passages[1..]
                    .iter()
                    .map(move |(p, s)| (d.doc_id.as_str(), p.as_str(), *s))
            })
            .collect();
        rest.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(b.1)));
        chosen.extend(rest);
        chosen.truncate(k);

        let passages = chosen
            .into_iter()
            .map(|(doc_id, pid, _)| {
                let passage = self
                    .store
                    .passage(pid)
                    .expect("retrieved passages exist in the store")
                    .clone();
                let meta = self
                    .store
                    .get_document(doc_id)
                    .map(|d| d.meta.clone())
                    .unwrap_or_default();
                ReaderPassage { passage, meta }
            })
            .collect();
        Ok(Candidates {
            documents,
            passages,
        })
    }

    /// Runs the full pipeline for one request.
    pub fn run(&self, request: &QueryRequest) -> Result<Vec<ResultRow>, PipelineError> {
        request.validate()?;
        let order = self.validate()?;
        let mut candidates: Option<Candidates> = None;
        let mut rows: Vec<ResultRow> = Vec::new();
        for name in &order {
            let kind = self
                .nodes
                .iter()
                .find(|n| &n.name == name)
                .expect("validated")
                .kind;
            match kind {
                NodeKind::Retriever => {
                    candidates = Some(self.candidates(&request.query, request.retriever_top_k)?);
                }
                NodeKind::Reader => {
                    let c = candidates
                        .take()
                        .expect("validated: reader follows retriever");
                    rows = self.read(name, &request.query, &c, request.reader_top_k)?;
                }
                NodeKind::Reranker => rows = rerank(rows),
            }
        }
        Ok(rows)
    }

    fn read(
        &self,
        stage: &str,
        query: &str,
        c: &Candidates,
        top_k: usize,
    ) -> Result<Vec<ResultRow>, PipelineError> {
        if c.passages.is_empty() {
            return Ok(vec![row_from_answer(0, Answer::no_answer(0.0), 0.0)]);
        }
        let answers = self
            .reader
            .read(query, &c.passages, top_k)
            .map_err(|source| PipelineError::Reader {
                stage: stage.to_string(),
                source,
            })?;
        let doc_scores: HashMap<&str, f64> = c
            .documents
            .iter()
            .map(|d| (d.doc_id.as_str(), d.score))
            .collect();

        let mut rows = Vec::with_capacity(answers.len());
        for (i, mut a) in answers.into_iter().take(top_k).enumerate() {
            if !a.is_no_answer() {
                let doc =
                    self.store
                        .get_document(&a.doc_id)
                        .map_err(|e| PipelineError::OffsetLaw {
                            stage: stage.to_string(),
                            reason: e.to_string(),
                        })?;
                a.check_against_document(&doc.text)
                    .map_err(|reason| PipelineError::OffsetLaw {
                        stage: stage.to_string(),
                        reason,
                    })?;
                a.meta = doc.meta.clone();
            }
            let rs = doc_scores.get(a.doc_id.as_str()).copied().unwrap_or(0.0);
            rows.push(row_from_answer(i, a, rs));
        }
        if rows.is_empty() {
            rows.push(row_from_answer(0, Answer::no_answer(0.0), 0.0));
        }
        Ok(rerank(rows))
    }
}

fn row_from_answer(index: usize, a: Answer, retriever_score: f64) -> ResultRow {
    ResultRow {
        index,
        answer: a.answer,
        kind: a.kind.as_str().to_string(),
        score: a.score,
        context: a.context,
        meta: a.meta,
        offsets_in_document: a.offsets_in_document,
        offsets_in_context: a.offsets_in_context,
        doc_id: a.doc_id,
        retriever_score,
    }
}

/// Returns one cycle (first node repeated at the end) if the graph has any.
fn find_cycle(succ: &BTreeMap<&str, Vec<&str>>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit<'a>(
        n: &'a str,
        succ: &BTreeMap<&'a str, Vec<&'a str>>,
        mark: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        mark.insert(n, Mark::Active);
        stack.push(n);
        for &m in &succ[n] {
            match mark[m] {
                Mark::Active => {
                    let pos = stack.iter().position(|&s| s == m).unwrap();
                    let mut cycle: Vec<String> =
                        stack[pos..].iter().map(|s| s.to_string()).collect();
                    cycle.push(m.to_string());
                    return Some(cycle);
                }
                Mark::New => {
                    if let Some(c) = visit(m, succ, mark, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        mark.insert(n, Mark::Done);
        None
    }
    let mut mark: HashMap<&str, Mark> = succ.keys().map(|&k| (k, Mark::New)).collect();
    let names: BTreeSet<&str> = succ.keys().copied().collect();
    for n in names {
        if mark[n] == Mark::New {
            if let Some(c) = visit(n, succ, &mut mark, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}
