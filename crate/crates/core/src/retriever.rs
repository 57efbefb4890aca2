//! TF-IDF passage index with cosine ranking.
//!
//! Weights use raw term counts, smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1` and L2 normalization. Document frequencies are
//! counted over passages, and a document scores as its best passage.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocumentStore, Passage};
use crate::text::Tokenizer;

pub type TermId = u32;

/// Sparse vector sorted by term id.
pub type SparseVector = Vec<(TermId, f64)>;

#[derive(Debug, Error)]
pub enum RetrieverError {
    #[error("cannot fit a model on an empty corpus")]
    EmptyCorpus,
    #[error("the model has not been fitted")]
    NotFitted,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_passages: usize, df: usize) -> f64 {
    ((1.0 + n_passages as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// A fitted TF-IDF model. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct TfIdfModel {
    tokenizer: Tokenizer,
    vocab: HashMap<String, TermId>,
    terms: Vec<String>,
    df: Vec<usize>,
    idf: Vec<f64>,
    n_passages: usize,
    passage_ids: Vec<String>,
    vectors: Vec<SparseVector>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl TfIdfModel {
    /// Fits over passages with the default tokenizer.
    pub fn fit<'a, I>(passages: I) -> Result<Self, RetrieverError>
    where
        I: IntoIterator<Item = &'a Passage>,
    {
        Self::fit_with(passages, Tokenizer::default())
    }

    pub fn fit_with<'a, I>(passages: I, tokenizer: Tokenizer) -> Result<Self, RetrieverError>
    where
        I: IntoIterator<Item = &'a Passage>,
    {
        let texts: Vec<(String, String)> = passages
            .into_iter()
            .map(|p| (p.passage_id.clone(), p.text.clone()))
            .collect();
        Self::fit_texts(texts, tokenizer)
    }

    /// Fits over `(id, text)` pairs. Ids must be unique.
    pub fn fit_texts(
        texts: Vec<(String, String)>,
        tokenizer: Tokenizer,
    ) -> Result<Self, RetrieverError> {
        let mut counted: Vec<(String, BTreeMap<String, usize>)> = texts
            .into_iter()
            .map(|(id, text)| {
                let mut tf = BTreeMap::new();
                for tok in tokenizer.tokenize(&text) {
                    *tf.entry(tok.term).or_insert(0) += 1;
                }
                (id, tf)
            })
            .collect();
        if counted.iter().all(|(_, tf)| tf.is_empty()) {
            return Err(RetrieverError::EmptyCorpus);
        }
        counted.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = counted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(RetrieverError::Inconsistent(format!(
                "duplicate passage id {}",
                w[0].0
            )));
        }

        let mut df_by_term: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, tf) in &counted {
            for term in tf.keys() {
                *df_by_term.entry(term.as_str()).or_insert(0) += 1;
            }
        }
        let n = counted.len();
        let terms: Vec<String> = df_by_term.keys().map(|t| t.to_string()).collect();
        let df: Vec<usize> = df_by_term.values().copied().collect();
        let idf: Vec<f64> = df.iter().map(|&d| smoothed_idf(n, d)).collect();
        let vocab: HashMap<String, TermId> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();

        let mut passage_ids = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for (id, tf) in counted {
            let raw: SparseVector = tf
                .iter()
                .map(|(term, &count)| {
                    let tid = vocab[term];
                    (tid, count as f64 * idf[tid as usize])
                })
                .collect();
            passage_ids.push(id);
            vectors.push(l2_normalize(raw));
        }
        Ok(Self::assemble(
            tokenizer,
            terms,
            df,
            idf,
            n,
            passage_ids,
            vectors,
        ))
    }

    /// Rebuilds a model from persisted parts. `terms` is indexed by term id
    /// and `vectors` pairs each passage id with its stored weights.
    pub fn from_parts(
        tokenizer: Tokenizer,
        terms: Vec<String>,
        df: Vec<usize>,
        idf: Vec<f64>,
        n_passages: usize,
        vectors: Vec<(String, SparseVector)>,
    ) -> Result<Self, RetrieverError> {
        if terms.len() != df.len() || terms.len() != idf.len() {
            return Err(RetrieverError::Inconsistent(
                "vocabulary column lengths differ".into(),
            ));
        }
        if vectors.len() != n_passages {
            return Err(RetrieverError::Inconsistent(format!(
                "expected {n_passages} vectors, found {}",
                vectors.len()
            )));
        }
        let mut vectors = vectors;
        vectors.sort_by(|a, b| a.0.cmp(&b.0));
        for (id, v) in &vectors {
            if v.iter().any(|&(t, _)| t as usize >= terms.len()) {
                return Err(RetrieverError::Inconsistent(format!(
                    "vector {id} references unknown term"
                )));
            }
            if v.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(RetrieverError::Inconsistent(format!(
                    "vector {id} is not sorted"
                )));
            }
        }
        let (passage_ids, vectors) = vectors.into_iter().unzip();
        Ok(Self::assemble(
            tokenizer,
            terms,
            df,
            idf,
            n_passages,
            passage_ids,
            vectors,
        ))
    }

    fn assemble(
        tokenizer: Tokenizer,
        terms: Vec<String>,
        df: Vec<usize>,
        idf: Vec<f64>,
        n_passages: usize,
        passage_ids: Vec<String>,
        vectors: Vec<SparseVector>,
    ) -> Self {
        let vocab = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let mut postings = vec![Vec::new(); terms.len()];
        for (pi, v) in vectors.iter().enumerate() {
            for &(t, w) in v {
                postings[t as usize].push((pi as u32, w));
            }
        }
        Self {
            tokenizer,
            vocab,
            terms,
            df,
            idf,
            n_passages,
            passage_ids,
            vectors,
            postings,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.n_passages > 0
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn n_passages(&self) -> usize {
        self.n_passages
    }

    pub fn vocab_len(&self) -> usize {
        self.terms.len()
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term).copied()
    }

    /// Terms ordered by id.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df_of(&self, term: &str) -> Option<usize> {
        self.term_id(term).map(|t| self.df[t as usize])
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.term_id(term).map(|t| self.idf[t as usize])
    }

    /// Document frequencies ordered by term id.
    pub fn dfs(&self) -> &[usize] {
        &self.df
    }

    /// IDF weights ordered by term id.
    pub fn idfs(&self) -> &[f64] {
        &self.idf
    }

    /// The idf of a term, extending the smoothed formula to `df = 0` for
    /// terms outside the vocabulary.
    pub fn idf_or_unseen(&self, term: &str) -> f64 {
        self.idf_of(term)
            .unwrap_or_else(|| smoothed_idf(self.n_passages, 0))
    }

    /// Passage ids with their vectors, in ascending id order.
    pub fn vectors(&self) -> impl Iterator<Item = (&str, &SparseVector)> {
        self.passage_ids
            .iter()
            .map(String::as_str)
            .zip(self.vectors.iter())
    }

    pub fn vector_of(&self, passage_id: &str) -> Option<&SparseVector> {
        self.passage_ids
            .binary_search_by(|p| p.as_str().cmp(passage_id))
            .ok()
            .map(|i| &self.vectors[i])
    }

    /// Vectorizes text against the fitted vocabulary. Unknown terms are
    /// ignored; all-unknown text gives the empty vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut tf: BTreeMap<TermId, usize> = BTreeMap::new();
        for tok in self.tokenizer.tokenize(text) {
            if let Some(t) = self.term_id(&tok.term) {
                *tf.entry(t).or_insert(0) += 1;
            }
        }
        l2_normalize(
            tf.into_iter()
                .map(|(t, c)| (t, c as f64 * self.idf[t as usize]))
                .collect(),
        )
    }

    /// Top-k passages by cosine similarity. Zero scores are excluded; ties
    /// break by ascending passage id.
    pub fn retrieve_passages(
        &self,
        query: &str,
        k: usize,
    ) -> Result<Vec<(String, f64)>, RetrieverError> {
        if k == 0 {
            return Err(RetrieverError::InvalidK);
        }
        let scored = self.score_all(query)?;
        Ok(top_k(scored, k)
            .into_iter()
            .map(|(pi, s)| (self.passage_ids[pi].clone(), s))
            .collect())
    }

    /// Every passage with a non-zero score, unsorted, by internal index.
    fn score_all(&self, query: &str) -> Result<Vec<(usize, f64)>, RetrieverError> {
        if !self.is_fitted() {
            return Err(RetrieverError::NotFitted);
        }
        let q = self.transform(query);
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &(t, qw) in &q {
            for &(pi, pw) in &self.postings[t as usize] {
                *acc.entry(pi).or_insert(0.0) += qw * pw;
            }
        }
        Ok(acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(pi, s)| (pi as usize, s.min(1.0)))
            .collect())
    }

    /// Top-k documents, each scored by its best passage.
    pub fn retrieve_documents(
        &self,
        store: &DocumentStore,
        query: &str,
        k: usize,
    ) -> Result<Vec<RetrievedDocument>, RetrieverError> {
        if k == 0 {
            return Err(RetrieverError::InvalidK);
        }
        let mut scored = self.score_all(query)?;
        scored.sort_by(|a, b| cmp_scored(a.1, &self.passage_ids[a.0], b.1, &self.passage_ids[b.0]));

        let mut by_doc: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
        for (pi, s) in scored {
            let pid = &self.passage_ids[pi];
            let passage = store.passage(pid).ok_or_else(|| {
                RetrieverError::Inconsistent(format!("passage {pid} missing from store"))
            })?;
            by_doc
                .entry(passage.doc_id.as_str())
                .or_default()
                .push((pid.clone(), s));
        }
        let mut docs: Vec<RetrievedDocument> = by_doc
            .into_iter()
            .map(|(doc_id, best_passages)| RetrievedDocument {
                doc_id: doc_id.to_string(),
                score: best_passages[0].1,
                rank: 0,
                best_passages,
            })
            .collect();
        docs.sort_by(|a, b| cmp_scored(a.score, &a.doc_id, b.score, &b.doc_id));
        docs.truncate(k);
        for (i, d) in docs.iter_mut().enumerate() {
            d.rank = i + 1;
        }
        Ok(docs)
    }
}

/// Descending score, then ascending id.
fn cmp_scored(sa: f64, ia: &str, sb: f64, ib: &str) -> Ordering {
    sb.total_cmp(&sa).then_with(|| ia.cmp(ib))
}

fn top_k(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    // Internal indices follow ascending passage id, so index order is id order.
    let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    scored
}

fn l2_normalize(mut v: SparseVector) -> SparseVector {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut v {
            *w /= norm;
        }
    }
    v
}

/// Dot product of two sparse vectors sorted by term id.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// A document returned by retrieval with its scoring passages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedDocument {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
    pub best_passages: Vec<(String, f64)>,
}
