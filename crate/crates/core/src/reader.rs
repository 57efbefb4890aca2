//! Answer extraction from retrieved passages.
//!
//! [`BaselineReader`] is a deterministic lexical span scorer. [`RemoteReader`]
//! forwards passages to an external reader server over JSON/HTTP
//! (`POST /read`) and validates what comes back.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Meta, Passage};
use crate::retriever::TfIdfModel;
use crate::text::{char_len, char_slice, Token};

#[derive(Debug, Error)]
pub enum ReaderError {
    #[error("reader received no passages")]
    EmptyInput,
    #[error("invalid reader config: {0}")]
    InvalidConfig(String),
    #[error("confidence is defined for non-negative scores, got {0}")]
    Domain(f64),
    #[error("remote reader unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("protocol violation in answer {index}: {reason}")]
    ProtocolViolation { index: usize, reason: String },
    #[error("malformed reader response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReaderConfig {
    pub max_query_tokens: usize,
    pub max_answer_tokens: usize,
    pub max_seq_tokens: usize,
    pub baseline_span_cap: usize,
    pub no_answer_threshold: f64,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        Self {
            max_query_tokens: 100,
            max_answer_tokens: 250,
            max_seq_tokens: 512,
            baseline_span_cap: 30,
            no_answer_threshold: 0.0,
        }
    }
}

impl ReaderConfig {
    pub fn validate(&self) -> Result<(), ReaderError> {
        if self.max_query_tokens == 0 || self.max_answer_tokens == 0 || self.max_seq_tokens == 0 {
            return Err(ReaderError::InvalidConfig(
                "token limits must be positive".into(),
            ));
        }
        if self.baseline_span_cap == 0 || self.baseline_span_cap > self.max_answer_tokens {
            return Err(ReaderError::InvalidConfig(format!(
                "baseline_span_cap {} must be in 1..={}",
                self.baseline_span_cap, self.max_answer_tokens
            )));
        }
        if self.no_answer_threshold.is_nan() || self.no_answer_threshold < 0.0 {
            return Err(ReaderError::InvalidConfig(
                "no_answer_threshold must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Half-open character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Offsets {
    pub start: usize,
    pub end: usize,
}

impl Offsets {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn width(&self) -> usize {
        self.end.saturating_sub(self.start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Extractive,
    NoAnswer,
}

impl AnswerType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnswerType::Extractive => "extractive",
            AnswerType::NoAnswer => "no_answer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub answer: String,
    #[serde(rename = "type")]
    pub kind: AnswerType,
    pub score: f64,
    pub context: String,
    pub meta: Meta,
    pub offsets_in_document: Offsets,
    pub offsets_in_context: Offsets,
    pub doc_id: String,
    pub passage_id: String,
}

impl Answer {
    pub fn no_answer(score: f64) -> Self {
        Self {
            answer: String::new(),
            kind: AnswerType::NoAnswer,
            score,
            context: String::new(),
            meta: Meta::new(),
            offsets_in_document: Offsets::default(),
            offsets_in_context: Offsets::default(),
            doc_id: String::new(),
            passage_id: String::new(),
        }
    }

    pub fn is_no_answer(&self) -> bool {
        self.kind == AnswerType::NoAnswer
    }

    /// Checks the context-frame half of the substring law. The document
    /// frame is checked by [`Answer::check_against_document`].
    pub fn check_in_context(&self) -> Result<(), String> {
        match self.kind {
            AnswerType::NoAnswer => {
                if self.answer.is_empty() {
                    Ok(())
                } else {
                    Err("no_answer carries answer text".into())
                }
            }
            AnswerType::Extractive => {
                let c = self.offsets_in_context;
                let d = self.offsets_in_document;
                if char_slice(&self.context, c.start, c.end) != Some(self.answer.as_str()) {
                    return Err(format!("context slice {}..{} != answer", c.start, c.end));
                }
                let n = char_len(&self.answer);
                if c.width() != n || d.width() != n || d.start > d.end {
                    return Err(format!(
                        "offset widths {} / {} != answer length {n}",
                        c.width(),
                        d.width()
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn check_against_document(&self, document_text: &str) -> Result<(), String> {
        self.check_in_context()?;
        if self.kind == AnswerType::Extractive {
            let d = self.offsets_in_document;
            if char_slice(document_text, d.start, d.end) != Some(self.answer.as_str()) {
                return Err(format!("document slice {}..{} != answer", d.start, d.end));
            }
        }
        Ok(())
    }
}

/// A passage handed to a reader together with its document metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ReaderPassage {
    pub passage: Passage,
    pub meta: Meta,
}

/// A pipeline reader stage.
pub trait Reader: Send + Sync {
    fn name(&self) -> &str;

    fn read(
        &self,
        query: &str,
        passages: &[ReaderPassage],
        top_k: usize,
    ) -> Result<Vec<Answer>, ReaderError>;
}

/// Maps a non-negative raw score onto `[0, 1)` via `s / (1 + s)`.
pub fn confidence(raw_score: f64) -> Result<f64, ReaderError> {
    if raw_score.is_nan() || raw_score < 0.0 {
        return Err(ReaderError::Domain(raw_score));
    }
    if raw_score.is_infinite() {
        return Ok(1.0);
    }
    Ok(raw_score / (1.0 + raw_score))
}

/// Cuts `query` after its first `max_tokens` words.
pub fn truncate_query<'q>(model: &TfIdfModel, query: &'q str, max_tokens: usize) -> &'q str {
    let tokens = model.tokenizer().tokenize(query);
    match tokens.get(max_tokens.saturating_sub(1)) {
        Some(t) if tokens.len() > max_tokens => char_slice(query, 0, t.char_end).unwrap_or(query),
        _ => query,
    }
}

/// Candidate span inside one passage, in token coordinates.
#[derive(Debug, Clone, Copy)]
struct Span {
    passage: usize,
    first: usize,
    last: usize,
    char_start: usize,
    raw: f64,
}

/// Idf-weighted query-coverage span scorer.
///
/// A span's raw score is the summed idf of distinct query terms it contains
/// divided by the square root of its token length. Spans are taken greedily
/// by descending score (ties: earlier start in the passage, then shorter,
/// then passage id), skipping spans that overlap an already taken span of
/// the same passage. Only spans scoring above `no_answer_threshold` are
/// eligible; when none is, a single `no_answer` with score 0 is returned.
#[derive(Debug, Clone)]
pub struct BaselineReader {
    model: Arc<TfIdfModel>,
    cfg: ReaderConfig,
}

impl BaselineReader {
    pub fn new(model: Arc<TfIdfModel>, cfg: ReaderConfig) -> Result<Self, ReaderError> {
        cfg.validate()?;
        Ok(Self { model, cfg })
    }

    pub fn config(&self) -> &ReaderConfig {
        &self.cfg
    }

    /// Distinct query terms (sorted) and their idf weights.
    pub fn query_terms(&self, query: &str) -> Vec<(String, f64)> {
        let query = truncate_query(&self.model, query, self.cfg.max_query_tokens);
        let terms: BTreeSet<String> = self
            .model
            .tokenizer()
            .tokenize(query)
            .into_iter()
            .map(|t| t.term)
            .collect();
        terms
            .into_iter()
            .map(|t| {
                let idf = self.model.idf_or_unseen(&t);
                (t, idf)
            })
            .collect()
    }

    fn passage_spans(
        &self,
        pi: usize,
        tokens: &[Token],
        q: &[(String, f64)],
        q_index: &HashMap<&str, usize>,
        out: &mut Vec<Span>,
    ) {
        let cap = self.cfg.baseline_span_cap;
        let mut present = vec![false; q.len()];
        for i in 0..tokens.len() {
            present.iter_mut().for_each(|p| *p = false);
            let mut sum = 0.0;
            for j in i..tokens.len().min(i + cap) {
                if let Some(&qi) = q_index.get(tokens[j].term.as_str()) {
                    if !present[qi] {
                        present[qi] = true;
                        // summed in query-term order so equal sets give equal bits
                        sum = q
                            .iter()
                            .zip(&present)
                            .filter(|(_, &p)| p)
                            .map(|((_, w), _)| w)
                            .sum();
                    }
                }
                let raw = sum / ((j - i + 1) as f64).sqrt();
                if raw > self.cfg.no_answer_threshold {
                    out.push(Span {
                        passage: pi,
                        first: i,
                        last: j,
                        char_start: tokens[i].char_start,
                        raw,
                    });
                }
            }
        }
    }
}

impl Reader for BaselineReader {
    fn name(&self) -> &str {
        "baseline"
    }

    fn read(
        &self,
        query: &str,
        passages: &[ReaderPassage],
        top_k: usize,
    ) -> Result<Vec<Answer>, ReaderError> {
        if passages.is_empty() {
            return Err(ReaderError::EmptyInput);
        }
        let top_k = top_k.max(1);
        let q = self.query_terms(query);
        let q_index: HashMap<&str, usize> = q
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.as_str(), i))
            .collect();

        let tokenized: Vec<Vec<Token>> = passages
            .iter()
            .map(|p| self.model.tokenizer().tokenize(&p.passage.text))
            .collect();
        let mut spans = Vec::new();
        for (pi, tokens) in tokenized.iter().enumerate() {
            self.passage_spans(pi, tokens, &q, &q_index, &mut spans);
        }
        if spans.is_empty() {
            return Ok(vec![Answer::no_answer(0.0)]);
        }
        spans.sort_by(|a, b| {
            b.raw
                .total_cmp(&a.raw)
                .then(a.char_start.cmp(&b.char_start))
                .then((a.last - a.first).cmp(&(b.last - b.first)))
                .then_with(|| {
                    passages[a.passage]
                        .passage
                        .passage_id
                        .cmp(&passages[b.passage].passage.passage_id)
                })
                .then(a.passage.cmp(&b.passage))
        });

        let mut taken: Vec<Span> = Vec::new();
        for span in spans {
            if taken.len() == top_k {
                break;
            }
            let overlaps = taken
                .iter()
                .any(|t| t.passage == span.passage && span.first <= t.last && t.first <= span.last);
            if !overlaps {
                taken.push(span);
            }
        }

        taken
            .into_iter()
            .map(|s| {
                let rp = &passages[s.passage];
                let tokens = &tokenized[s.passage];
                let ctx = Offsets::new(tokens[s.first].char_start, tokens[s.last].char_end);
                let text = char_slice(&rp.passage.text, ctx.start, ctx.end)
                    .expect("token offsets lie inside the passage")
                    .to_string();
                Ok(Answer {
                    answer: text,
                    kind: AnswerType::Extractive,
                    score: confidence(s.raw)?,
                    context: rp.passage.text.clone(),
                    meta: rp.meta.clone(),
                    offsets_in_document: Offsets::new(
                        rp.passage.char_start + ctx.start,
                        rp.passage.char_start + ctx.end,
                    ),
                    offsets_in_context: ctx,
                    doc_id: rp.passage.doc_id.clone(),
                    passage_id: rp.passage.passage_id.clone(),
                })
            })
            .collect()
    }
}

/// Request body of the reader wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub query: String,
    pub top_k: usize,
    pub passages: Vec<WirePassage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePassage {
    pub passage_id: String,
    pub text: String,
    pub meta: Meta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadResponse {
    pub answers: Vec<WireAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAnswer {
    pub passage_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub score: f64,
}

/// Client for an external reader server.
///
/// An empty span (`start == end`, empty text) is read as the server's
/// no-answer verdict and keeps its score.
#[derive(Debug, Clone)]
pub struct RemoteReader {
    endpoint: String,
    agent: ureq::Agent,
    model: Arc<TfIdfModel>,
    cfg: ReaderConfig,
}

impl RemoteReader {
    pub fn new(
        base_url: &str,
        timeout: Duration,
        model: Arc<TfIdfModel>,
        cfg: ReaderConfig,
    ) -> Result<Self, ReaderError> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        let endpoint = format!("{}/read", base_url.trim_end_matches('/'));
        Ok(Self {
            endpoint,
            agent,
            model,
            cfg,
        })
    }

    /// Validates a server response against the passages that were sent.
    pub fn map_response(
        &self,
        passages: &[ReaderPassage],
        response: ReadResponse,
        top_k: usize,
    ) -> Result<Vec<Answer>, ReaderError> {
        let by_id: HashMap<&str, &ReaderPassage> = passages
            .iter()
            .map(|p| (p.passage.passage_id.as_str(), p))
            .collect();
        let mut answers = Vec::with_capacity(response.answers.len());
        for (index, wa) in response.answers.into_iter().enumerate() {
            let violation = |reason: String| ReaderError::ProtocolViolation { index, reason };
            let rp = by_id
                .get(wa.passage_id.as_str())
                .ok_or_else(|| violation(format!("unknown passage_id {:?}", wa.passage_id)))?;
            if !(0.0..=1.0).contains(&wa.score) {
                return Err(violation(format!("score {} outside [0, 1]", wa.score)));
            }
            if wa.start > wa.end {
                return Err(violation(format!("start {} > end {}", wa.start, wa.end)));
            }
            let slice = char_slice(&rp.passage.text, wa.start, wa.end).ok_or_else(|| {
                violation(format!("offsets {}..{} out of range", wa.start, wa.end))
            })?;
            if slice != wa.text {
                return Err(violation(format!(
                    "text does not equal passage slice {}..{}",
                    wa.start, wa.end
                )));
            }
            if wa.start == wa.end {
                answers.push(Answer::no_answer(wa.score));
                continue;
            }
            answers.push(Answer {
                answer: wa.text,
                kind: AnswerType::Extractive,
                score: wa.score,
                context: rp.passage.text.clone(),
                meta: rp.meta.clone(),
                offsets_in_document: Offsets::new(
                    rp.passage.char_start + wa.start,
                    rp.passage.char_start + wa.end,
                ),
                offsets_in_context: Offsets::new(wa.start, wa.end),
                doc_id: rp.passage.doc_id.clone(),
                passage_id: rp.passage.passage_id.clone(),
            });
        }
        answers.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
        answers.truncate(top_k.max(1));
        if answers.is_empty() {
            answers.push(Answer::no_answer(0.0));
        }
        Ok(answers)
    }
}

impl Reader for RemoteReader {
    fn name(&self) -> &str {
        "remote"
    }

    fn read(
        &self,
        query: &str,
        passages: &[ReaderPassage],
        top_k: usize,
    ) -> Result<Vec<Answer>, ReaderError> {
        if passages.is_empty() {
            return Err(ReaderError::EmptyInput);
        }
        let request = ReadRequest {
            query: truncate_query(&self.model, query, self.cfg.max_query_tokens).to_string(),
            top_k,
            passages: passages
                .iter()
                .map(|p| WirePassage {
                    passage_id: p.passage.passage_id.clone(),
                    text: p.passage.text.clone(),
                    meta: p.meta.clone(),
                })
                .collect(),
        };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(&request)
            .map_err(|e| ReaderError::RemoteUnavailable(e.to_string()))?;
        let body: ReadResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| ReaderError::MalformedResponse(e.to_string()))?;
        self.map_response(passages, body, top_k)
    }
}
