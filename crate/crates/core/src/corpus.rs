//! Publication ingestion, text cleaning, passage splitting and the document
//! store.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::text::{char_len, char_slice, Tokenizer};

/// String-keyed metadata attached to documents and answers.
pub type Meta = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("CSV parse error at row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("CSV header is missing column {0:?}")]
    MissingColumn(String),
    #[error("duplicate key(s): {}", .0.join(", "))]
    DuplicateKey(Vec<String>),
    #[error("document {0:?} has no text")]
    EmptyDocument(String),
    #[error("invalid split config: max_tokens={max_tokens}, stride={stride}")]
    InvalidSplit { max_tokens: usize, stride: usize },
    #[error("invalid article {pmid:?}: {reason}")]
    InvalidArticle { pmid: String, reason: String },
    #[error("document {0:?} not found")]
    NotFound(String),
}

/// One publication record as read from the source table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawArticle {
    pub pmid: String,
    pub title: String,
    pub paragraphs: Vec<String>,
    pub url: String,
    pub publication_date: String,
    pub authors: Vec<String>,
    pub full_text: String,
}

impl RawArticle {
    pub fn check(&self) -> Result<(), CorpusError> {
        if self.pmid.trim().is_empty() {
            return Err(CorpusError::InvalidArticle {
                pmid: self.pmid.clone(),
                reason: "empty pmid".into(),
            });
        }
        if !self.has_text() {
            return Err(CorpusError::InvalidArticle {
                pmid: self.pmid.clone(),
                reason: "no paragraphs and no full text".into(),
            });
        }
        Ok(())
    }

    fn has_text(&self) -> bool {
        self.paragraphs.iter().any(|p| !p.trim().is_empty()) || !self.full_text.trim().is_empty()
    }

    /// Cleaned document text: paragraphs when present, else the full text.
    pub fn cleaned_text(&self) -> String {
        if self.paragraphs.iter().any(|p| !p.trim().is_empty()) {
            clean_text(&self.paragraphs.join("\n\n"))
        } else {
            clean_text(&self.full_text)
        }
    }
}

/// Maps the logical article fields onto CSV header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub pmid: String,
    pub title: String,
    pub paragraphs: String,
    pub url: String,
    pub publication_date: String,
    pub authors: String,
    /// Optional column; ignored when absent from the header.
    pub full_text: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            pmid: "PMID".into(),
            title: "title".into(),
            paragraphs: "paragraphs".into(),
            url: "URL".into(),
            publication_date: "publication date".into(),
            authors: "authors".into(),
            full_text: Some("full_text".into()),
        }
    }
}

/// A data row that could not become an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based data row number (the header is row 0).
    pub row: u64,
    pub pmid: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub articles: Vec<RawArticle>,
    pub rejected: Vec<RejectedRow>,
}

/// Reads publication records from CSV.
///
/// The paragraphs column may hold a JSON array of strings or a single text
/// blob; authors may be a JSON array or a `;`-separated list.
pub fn ingest_csv<R: Read>(
    source: R,
    schema: &ColumnMapping,
) -> Result<IngestOutcome, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize, CorpusError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let i_pmid = col(&schema.pmid)?;
    let i_title = col(&schema.title)?;
    let i_paras = col(&schema.paragraphs)?;
    let i_url = col(&schema.url)?;
    let i_date = col(&schema.publication_date)?;
    let i_authors = col(&schema.authors)?;
    let i_full = schema
        .full_text
        .as_deref()
        .and_then(|n| headers.iter().position(|h| h.trim() == n));

    let mut out = IngestOutcome::default();
    for (n, record) in rdr.records().enumerate() {
        let row = n as u64 + 1;
        let record = record.map_err(|e| CorpusError::Csv {
            row,
            message: e.to_string(),
        })?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let article = RawArticle {
            pmid: field(i_pmid).trim().to_string(),
            title: field(i_title).trim().to_string(),
            paragraphs: parse_list_or_blob(&field(i_paras)),
            url: field(i_url).trim().to_string(),
            publication_date: field(i_date).trim().to_string(),
            authors: parse_authors(&field(i_authors)),
            full_text: i_full.map(field).unwrap_or_default(),
        };
        match article.check() {
            Ok(()) => out.articles.push(article),
            Err(CorpusError::InvalidArticle { pmid, reason }) => {
                out.rejected.push(RejectedRow { row, pmid, reason })
            }
            Err(e) => return Err(e),
        }
    }

    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for a in &out.articles {
        if !seen.insert(a.pmid.as_str()) {
            dups.insert(a.pmid.clone());
        }
    }
    if !dups.is_empty() {
        return Err(CorpusError::DuplicateKey(dups.into_iter().collect()));
    }
    Ok(out)
}

fn parse_list_or_blob(raw: &str) -> Vec<String> {
    let trimmed = raw.trim();
    if trimmed.starts_with('[') {
        if let Ok(list) = serde_json::from_str::<Vec<String>>(trimmed) {
            return list;
        }
    }
    if trimmed.is_empty() {
        Vec::new()
    } else {
        vec![raw.to_string()]
    }
}

fn parse_authors(raw: &str) -> Vec<String> {
    let trimmed = raw.trim();
    if trimmed.starts_with('[') {
        if let Ok(list) = serde_json::from_str::<Vec<String>>(trimmed) {
            return list;
        }
    }
    trimmed
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Inclusive publication-date window applied at ingestion time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleFilter {
    pub published_from: Option<NaiveDate>,
    pub published_to: Option<NaiveDate>,
}

impl ArticleFilter {
    /// Articles with an unparseable date are excluded whenever a bound is set.
    pub fn accepts(&self, article: &RawArticle) -> bool {
        if self.published_from.is_none() && self.published_to.is_none() {
            return true;
        }
        let Some(date) = parse_date(&article.publication_date) else {
            return false;
        };
        self.published_from.is_none_or(|from| date >= from)
            && self.published_to.is_none_or(|to| date <= to)
    }
}

/// Parses `YYYY-MM-DD`, also accepting a full RFC 3339 timestamp or a bare
/// `YYYY-MM` / `YYYY` (first day of the period).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.date_naive());
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d") {
        return Some(d);
    }
    NaiveDate::parse_from_str(&format!("{s}-01-01"), "%Y-%m-%d").ok()
}

/// NFC-normalizes, drops control characters and byte-order marks, collapses
/// whitespace runs to one space and trims. No other characters are removed.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfc() {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() || c == '\u{feff}' {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// A cleaned, stored article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub meta: Meta,
}

impl Document {
    pub fn from_article(article: &RawArticle, source: &str) -> Result<Self, CorpusError> {
        article.check()?;
        let text = article.cleaned_text();
        if text.is_empty() {
            return Err(CorpusError::EmptyDocument(article.pmid.clone()));
        }
        let mut meta = Meta::new();
        meta.insert("name".into(), clean_text(&article.title));
        for (k, v) in [
            ("url", article.url.clone()),
            ("publication_date", article.publication_date.clone()),
            ("authors", article.authors.join("; ")),
            ("source", source.to_string()),
        ] {
            if !v.is_empty() {
                meta.insert(k.into(), v);
            }
        }
        Ok(Self {
            doc_id: article.pmid.clone(),
            text,
            meta,
        })
    }

    pub fn title(&self) -> &str {
        self.meta.get("name").map(String::as_str).unwrap_or("")
    }
}

/// A token window of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub doc_id: String,
    pub index_in_doc: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

/// Window size and stride, both in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub max_tokens: usize,
    pub stride: usize,
    pub tokenizer: Tokenizer,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            stride: 512,
            tokenizer: Tokenizer::default(),
        }
    }
}

impl SplitConfig {
    pub fn new(max_tokens: usize, stride: usize) -> Result<Self, CorpusError> {
        let cfg = Self {
            max_tokens,
            stride,
            tokenizer: Tokenizer::default(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CorpusError> {
        if self.max_tokens == 0 || self.stride == 0 || self.stride > self.max_tokens {
            return Err(CorpusError::InvalidSplit {
                max_tokens: self.max_tokens,
                stride: self.stride,
            });
        }
        Ok(())
    }
}

pub fn passage_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index:04}")
}

/// Splits a document into consecutive token windows.
///
/// A passage runs from the start of its first token (or the start of the
/// document, for the first passage) up to the start of the first token after
/// the window (or the end of the document). With `stride == max_tokens` the
/// passages therefore tile the document text exactly.
pub fn split_passages(doc: &Document, cfg: &SplitConfig) -> Result<Vec<Passage>, CorpusError> {
    cfg.check()?;
    let tokens = cfg.tokenizer.tokenize(&doc.text);
    if tokens.is_empty() {
        return Err(CorpusError::EmptyDocument(doc.doc_id.clone()));
    }
    let doc_len = char_len(&doc.text);
    let n = tokens.len();
    let mut passages = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + cfg.max_tokens).min(n);
        let char_start = if start == 0 {
            0
        } else {
            tokens[start].char_start
        };
        let char_end = if end == n {
            doc_len
        } else {
            tokens[end].char_start
        };
        let text = char_slice(&doc.text, char_start, char_end)
            .expect("token offsets lie inside the document")
            .to_string();
        let index = passages.len();
        passages.push(Passage {
            passage_id: passage_id(&doc.doc_id, index),
            doc_id: doc.doc_id.clone(),
            index_in_doc: index,
            char_start,
            char_end,
            text,
        });
        if end == n {
            break;
        }
        start += cfg.stride;
    }
    Ok(passages)
}

/// Documents and their passages keyed by stable identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentStore {
    documents: BTreeMap<String, Document>,
    passages: BTreeMap<String, Passage>,
    doc_passages: BTreeMap<String, Vec<String>>,
}

impl DocumentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds all articles or none. Existing ids and duplicates inside the
    /// batch are both reported as duplicate keys.
    pub fn add_documents(
        &mut self,
        articles: &[RawArticle],
        cfg: &SplitConfig,
        source: &str,
    ) -> Result<(), CorpusError> {
        cfg.check()?;
        let mut dups = BTreeSet::new();
        let mut batch = BTreeSet::new();
        for a in articles {
            if self.documents.contains_key(&a.pmid) || !batch.insert(a.pmid.as_str()) {
                dups.insert(a.pmid.clone());
            }
        }
        if !dups.is_empty() {
            return Err(CorpusError::DuplicateKey(dups.into_iter().collect()));
        }

        let mut staged = Vec::with_capacity(articles.len());
        for a in articles {
            let doc = Document::from_article(a, source)?;
            let passages = split_passages(&doc, cfg)?;
            staged.push((doc, passages));
        }
        for (doc, passages) in staged {
            self.insert_unchecked(doc, passages);
        }
        Ok(())
    }

    /// Rebuilds a store from persisted parts, checking referential integrity
    /// and the passage slice law.
    pub fn from_parts(
        documents: Vec<Document>,
        passages: Vec<Passage>,
    ) -> Result<Self, CorpusError> {
        let mut store = Self::default();
        for d in documents {
            if store.documents.contains_key(&d.doc_id) {
                return Err(CorpusError::DuplicateKey(vec![d.doc_id]));
            }
            store.doc_passages.insert(d.doc_id.clone(), Vec::new());
            store.documents.insert(d.doc_id.clone(), d);
        }
        let mut passages = passages;
        passages.sort_by(|a, b| (&a.doc_id, a.index_in_doc).cmp(&(&b.doc_id, b.index_in_doc)));
        for p in passages {
            let doc = store
                .documents
                .get(&p.doc_id)
                .ok_or_else(|| CorpusError::NotFound(p.doc_id.clone()))?;
            if char_slice(&doc.text, p.char_start, p.char_end) != Some(p.text.as_str()) {
                return Err(CorpusError::InvalidArticle {
                    pmid: p.doc_id.clone(),
                    reason: format!("passage {} does not match its offsets", p.passage_id),
                });
            }
            if store.passages.contains_key(&p.passage_id) {
                return Err(CorpusError::DuplicateKey(vec![p.passage_id]));
            }
            store
                .doc_passages
                .get_mut(&p.doc_id)
                .expect("inserted above")
                .push(p.passage_id.clone());
            store.passages.insert(p.passage_id.clone(), p);
        }
        if let Some((id, _)) = store.doc_passages.iter().find(|(_, ps)| ps.is_empty()) {
            return Err(CorpusError::EmptyDocument(id.clone()));
        }
        Ok(store)
    }

    fn insert_unchecked(&mut self, doc: Document, passages: Vec<Passage>) {
        let ids = passages.iter().map(|p| p.passage_id.clone()).collect();
        for p in passages {
            self.passages.insert(p.passage_id.clone(), p);
        }
        self.doc_passages.insert(doc.doc_id.clone(), ids);
        self.documents.insert(doc.doc_id.clone(), doc);
    }

    pub fn get_document(&self, doc_id: &str) -> Result<&Document, CorpusError> {
        self.documents
            .get(doc_id)
            .ok_or_else(|| CorpusError::NotFound(doc_id.to_string()))
    }

    pub fn passage(&self, passage_id: &str) -> Option<&Passage> {
        self.passages.get(passage_id)
    }

    pub fn passages_of(&self, doc_id: &str) -> impl Iterator<Item = &Passage> {
        self.doc_passages
            .get(doc_id)
            .into_iter()
            .flatten()
            .filter_map(|id| self.passages.get(id))
    }

    /// Documents in ascending id order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    /// Passages in ascending id order.
    pub fn passages(&self) -> impl Iterator<Item = &Passage> {
        self.passages.values()
    }

    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    pub fn passage_count(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: text.into(),
            meta: Meta::from([("name".to_string(), format!("Title {id}"))]),
        }
    }

    fn article(pmid: &str, text: &str) -> RawArticle {
        RawArticle {
            pmid: pmid.into(),
            title: format!("Title {pmid}"),
            paragraphs: vec![text.into()],
            ..Default::default()
        }
    }

    const CSV_HEADER: &str = "PMID,title,paragraphs,URL,publication date,authors\n";

    #[test]
    fn ingest_two_rows() {
        let csv = format!(
            "{CSV_HEADER}1,First,\"[\"\"Para one.\"\", \"\"Para two.\"\"]\",http://a,2020-04-01,\"Doe, J; Roe, R\"\n\
             2,Second,A single blob of text,http://b,2021-01-05,\"[\"\"X\"\"]\"\n"
        );
        let out = ingest_csv(csv.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(out.articles.len(), 2);
        assert!(out.rejected.is_empty());
        assert_eq!(out.articles[0].paragraphs, vec!["Para one.", "Para two."]);
        assert_eq!(out.articles[0].authors, vec!["Doe, J", "Roe, R"]);
        assert_eq!(out.articles[1].paragraphs, vec!["A single blob of text"]);
        assert_eq!(out.articles[1].authors, vec!["X"]);
    }

    #[test]
    fn ingest_header_only_is_empty() {
        let out = ingest_csv(CSV_HEADER.as_bytes(), &ColumnMapping::default()).unwrap();
        assert!(out.articles.is_empty());
    }

    #[test]
    fn ingest_reports_duplicates() {
        let csv = format!("{CSV_HEADER}X1,a,text,,,\nX2,b,text,,,\nX1,c,text,,,\n");
        match ingest_csv(csv.as_bytes(), &ColumnMapping::default()) {
            Err(CorpusError::DuplicateKey(ids)) => assert_eq!(ids, vec!["X1"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ingest_reports_rows_without_key_or_text() {
        let csv = format!("{CSV_HEADER},a,text,,,\nX2,b,,,,\nX3,c,ok,,,\n");
        let out = ingest_csv(csv.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(out.articles.len(), 1);
        let rows: Vec<u64> = out.rejected.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![1, 2]);
    }

    #[test]
    fn ingest_malformed_csv_names_row() {
        let csv = format!("{CSV_HEADER}1,a,text,,,\n2,b\n");
        match ingest_csv(csv.as_bytes(), &ColumnMapping::default()) {
            Err(CorpusError::Csv { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ingest_missing_column() {
        let err = ingest_csv("PMID,title\n".as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "paragraphs"));
    }

    #[test]
    fn clean_text_examples() {
        assert_eq!(clean_text("a\t b\n\nc"), "a b c");
        assert_eq!(clean_text("fever"), "fever");
        assert_eq!(clean_text("\u{feff}x"), "x");
        assert_eq!(clean_text("  lead\u{0007}ing  "), "leading");
        // NFC composes e + combining acute
        assert_eq!(clean_text("cafe\u{0301}"), "caf\u{e9}");
        assert_eq!(clean_text("(COVID-19), 95% CI."), "(COVID-19), 95% CI.");
    }

    #[test]
    fn filter_by_date_window() {
        let f = ArticleFilter {
            published_from: NaiveDate::from_ymd_opt(2020, 3, 20),
            published_to: NaiveDate::from_ymd_opt(2021, 12, 31),
        };
        let mut a = article("1", "x");
        a.publication_date = "2020-03-19".into();
        assert!(!f.accepts(&a));
        a.publication_date = "2020-03-20".into();
        assert!(f.accepts(&a));
        a.publication_date = "2021-12-31T10:00:00Z".into();
        assert!(f.accepts(&a));
        a.publication_date = "2022".into();
        assert!(!f.accepts(&a));
        a.publication_date = "unknown".into();
        assert!(!f.accepts(&a));
        assert!(ArticleFilter::default().accepts(&a));
    }

    #[test]
    fn split_1200_tokens_into_512_512_176() {
        let d = doc("D", &words(1200));
        let ps = split_passages(&d, &SplitConfig::default()).unwrap();
        let sizes: Vec<usize> = ps.iter().map(|p| tokenize(&p.text).len()).collect();
        assert_eq!(sizes, vec![512, 512, 176]);
    }

    #[test]
    fn split_short_document_is_single_passage() {
        let d = doc("D", &words(10));
        let ps = split_passages(&d, &SplitConfig::default()).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].text, d.text);
        assert_eq!((ps[0].char_start, ps[0].char_end), (0, char_len(&d.text)));
    }

    #[test]
    fn split_with_overlap_matches_hand_offsets() {
        // Tokens "w0".."w999" separated by single spaces; recompute the
        // expected offsets by walking the string independently.
        let text = words(1000);
        let mut starts = Vec::new();
        let mut pos = 0;
        for w in text.split(' ') {
            starts.push(pos);
            pos += w.chars().count() + 1;
        }
        let d = doc("D", &text);
        let cfg = SplitConfig::new(512, 384).unwrap();
        let ps = split_passages(&d, &cfg).unwrap();
        assert_eq!(ps.len(), 3);
        let first_tokens: Vec<usize> = vec![0, 384, 768];
        for (p, &tok) in ps.iter().zip(&first_tokens) {
            let expected_start = if tok == 0 { 0 } else { starts[tok] };
            assert_eq!(p.char_start, expected_start);
            let last = (tok + 512).min(1000);
            let expected_end = if last == 1000 {
                text.chars().count()
            } else {
                starts[last]
            };
            assert_eq!(p.char_end, expected_end);
            assert_eq!(char_slice(&text, p.char_start, p.char_end).unwrap(), p.text);
            assert!(p.text.starts_with(&format!("w{tok} ")) || tok == 0);
        }
    }

    #[test]
    fn split_rejects_bad_config_and_empty_doc() {
        assert!(SplitConfig::new(0, 1).is_err());
        assert!(SplitConfig::new(4, 5).is_err());
        assert!(SplitConfig::new(4, 0).is_err());
        let d = doc("D", "... ,,, ");
        assert!(matches!(
            split_passages(&d, &SplitConfig::default()),
            Err(CorpusError::EmptyDocument(_))
        ));
    }

    #[test]
    fn non_overlapping_passages_reproduce_token_sequence() {
        let text = "Alpha, beta; gamma-delta.  Epsilon zeta (eta) theta iota kappa lambda mu.";
        let d = doc("D", &clean_text(text));
        let cfg = SplitConfig::new(3, 3).unwrap();
        let ps = split_passages(&d, &cfg).unwrap();
        let joined: Vec<String> = ps
            .iter()
            .flat_map(|p| tokenize(&p.text))
            .map(|t| t.term)
            .collect();
        let whole: Vec<String> = tokenize(&d.text).into_iter().map(|t| t.term).collect();
        assert_eq!(joined, whole);
        assert_eq!(ps.first().unwrap().char_start, 0);
        assert_eq!(ps.last().unwrap().char_end, char_len(&d.text));
        for w in ps.windows(2) {
            assert_eq!(w[0].char_end, w[1].char_start);
        }
    }

    #[test]
    fn add_documents_populates_store() {
        let mut store = DocumentStore::new();
        store
            .add_documents(
                &[article("1", "covid vaccine"), article("2", "cough")],
                &SplitConfig::default(),
                "test",
            )
            .unwrap();
        assert_eq!(store.document_count(), 2);
        assert!(store
            .documents()
            .all(|d| store.passages_of(&d.doc_id).count() >= 1));
        assert_eq!(store.get_document("1").unwrap().title(), "Title 1");
        assert!(matches!(
            store.get_document("nope"),
            Err(CorpusError::NotFound(_))
        ));
    }

    #[test]
    fn add_documents_is_atomic_on_duplicate() {
        let mut store = DocumentStore::new();
        store
            .add_documents(&[article("1", "a b")], &SplitConfig::default(), "t")
            .unwrap();
        let before = store.clone();
        let err = store
            .add_documents(
                &[article("2", "c"), article("1", "d")],
                &SplitConfig::default(),
                "t",
            )
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateKey(ids) if ids == vec!["1"]));
        assert_eq!(store, before);

        let err = store
            .add_documents(
                &[article("3", "c"), article("4", " ... ")],
                &SplitConfig::default(),
                "t",
            )
            .unwrap_err();
        assert!(matches!(err, CorpusError::EmptyDocument(_)));
        assert_eq!(store, before);
    }

    #[test]
    fn double_length_article_tiles_into_two_passages() {
        let cfg = SplitConfig::new(8, 8).unwrap();
        let mut store = DocumentStore::new();
        store
            .add_documents(&[article("D", &words(16))], &cfg, "t")
            .unwrap();
        let doc = store.get_document("D").unwrap();
        let ps: Vec<&Passage> = store.passages_of("D").collect();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].char_start, 0);
        assert_eq!(ps[0].char_end, ps[1].char_start);
        assert_eq!(ps[1].char_end, char_len(&doc.text));
        for p in ps {
            assert_eq!(
                char_slice(&doc.text, p.char_start, p.char_end).unwrap(),
                p.text
            );
        }
    }

    #[test]
    fn from_parts_round_trips() {
        let mut store = DocumentStore::new();
        store
            .add_documents(
                &[article("1", &words(20)), article("2", "x y")],
                &SplitConfig::new(5, 5).unwrap(),
                "t",
            )
            .unwrap();
        let docs: Vec<Document> = store.documents().cloned().collect();
        let ps: Vec<Passage> = store.passages().cloned().collect();
        assert_eq!(
            DocumentStore::from_parts(docs.clone(), ps.clone()).unwrap(),
            store
        );

        let mut bad = ps.clone();
        bad[0].text.push('!');
        assert!(DocumentStore::from_parts(docs, bad).is_err());
    }
}
