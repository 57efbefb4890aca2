//! On-disk index format.
//!
//! ```text
//! <index_dir>/
//!   manifest.json     format_version, counts, creation time, file digests
//!   documents.jsonl   one Document per line
//!   passages.jsonl    one Passage per line
//!   vocab.json        term -> {id, df, idf}
//!   vectors.jsonl     {"passage_id": ..., "weights": [[term_id, weight], ...]}
//! ```
//!
//! Floating-point values are written with 17 significant digits so that a
//! reloaded index scores bit-for-bit like the one that was saved.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use sciqa_core::corpus::{CorpusError, Document, DocumentStore, Passage, RawArticle, SplitConfig};
use sciqa_core::retriever::{RetrieverError, SparseVector, TermId, TfIdfModel};
use sciqa_core::text::Tokenizer;

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const DOCUMENTS: &str = "documents.jsonl";
const PASSAGES: &str = "passages.jsonl";
const VOCAB: &str = "vocab.json";
const VECTORS: &str = "vectors.jsonl";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("no index found in {0}")]
    Missing(PathBuf),
    #[error("index directory {0} is not empty (use --force to overwrite)")]
    NotEmpty(PathBuf),
    #[error("unsupported index format version: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },
    #[error("index integrity check failed for {file}: {reason}")]
    Integrity { file: String, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retriever(#[from] RetrieverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub created_at: DateTime<Utc>,
    pub documents: usize,
    pub passages: usize,
    pub vocabulary: usize,
    pub split: SplitConfig,
    pub tokenizer: Tokenizer,
    /// SHA-256 of each data file, hex encoded.
    pub files: BTreeMap<String, String>,
}

/// A loaded or freshly built index.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub store: DocumentStore,
    pub model: TfIdfModel,
    pub manifest: Manifest,
}

impl Snapshot {
    /// Builds the store and fits the model.
    pub fn build(
        articles: &[RawArticle],
        split: SplitConfig,
        source: &str,
    ) -> Result<Self, SnapshotError> {
        let mut store = DocumentStore::new();
        store.add_documents(articles, &split, source)?;
        let model = TfIdfModel::fit_with(store.passages(), split.tokenizer)?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            created_at: Utc::now(),
            documents: store.document_count(),
            passages: store.passage_count(),
            vocabulary: model.vocab_len(),
            split,
            tokenizer: split.tokenizer,
            files: BTreeMap::new(),
        };
        Ok(Self {
            store,
            model,
            manifest,
        })
    }

    /// Writes the snapshot. Refuses a non-empty directory unless `force`.
    pub fn save(&mut self, dir: &Path, force: bool) -> Result<(), SnapshotError> {
        if dir.exists() {
            let non_empty = fs::read_dir(dir)
                .map_err(|source| io(dir, source))?
                .next()
                .is_some();
            if non_empty && !force {
                return Err(SnapshotError::NotEmpty(dir.to_path_buf()));
            }
        }
        fs::create_dir_all(dir).map_err(|source| io(dir, source))?;

        let mut files = BTreeMap::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), SnapshotError> {
            let path = dir.join(name);
            fs::write(&path, &bytes).map_err(|source| io(&path, source))?;
            files.insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
            Ok(())
        };
        put(DOCUMENTS, jsonl(self.store.documents()))?;
        put(PASSAGES, jsonl(self.store.passages()))?;
        put(VOCAB, vocab_json(&self.model))?;
        put(VECTORS, vectors_jsonl(&self.model))?;

        self.manifest.files = files;
        let path = dir.join(MANIFEST);
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|source| io(&path, source))
    }

    pub fn load(dir: &Path) -> Result<Self, SnapshotError> {
        let manifest_path = dir.join(MANIFEST);
        if !manifest_path.is_file() {
            return Err(SnapshotError::Missing(dir.to_path_buf()));
        }
        let raw = fs::read(&manifest_path).map_err(|source| io(&manifest_path, source))?;
        let value: serde_json::Value =
            serde_json::from_slice(&raw).map_err(|e| integrity(MANIFEST, e))?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != FORMAT_VERSION {
            return Err(SnapshotError::Version {
                expected: FORMAT_VERSION,
                found,
            });
        }
        let manifest: Manifest =
            serde_json::from_value(value).map_err(|e| integrity(MANIFEST, e))?;

        let read_checked = |name: &str| -> Result<Vec<u8>, SnapshotError> {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|source| io(&path, source))?;
            let expected = manifest
                .files
                .get(name)
                .ok_or_else(|| integrity(name, "not listed in manifest"))?;
            if &hex::encode(Sha256::digest(&bytes)) != expected {
                return Err(integrity(name, "checksum mismatch"));
            }
            Ok(bytes)
        };

        let documents: Vec<Document> = read_jsonl(DOCUMENTS, &read_checked(DOCUMENTS)?)?;
        let passages: Vec<Passage> = read_jsonl(PASSAGES, &read_checked(PASSAGES)?)?;
        if documents.len() != manifest.documents {
            return Err(integrity(
                DOCUMENTS,
                format!(
                    "expected {} documents, found {}",
                    manifest.documents,
                    documents.len()
                ),
            ));
        }
        if passages.len() != manifest.passages {
            return Err(integrity(
                PASSAGES,
                format!(
                    "expected {} passages, found {}",
                    manifest.passages,
                    passages.len()
                ),
            ));
        }
        let store = DocumentStore::from_parts(documents, passages)?;

        let vocab: BTreeMap<String, VocabEntry> =
            serde_json::from_slice(&read_checked(VOCAB)?).map_err(|e| integrity(VOCAB, e))?;
        if vocab.len() != manifest.vocabulary {
            return Err(integrity(
                VOCAB,
                format!(
                    "expected {} terms, found {}",
                    manifest.vocabulary,
                    vocab.len()
                ),
            ));
        }
        let mut terms = vec![String::new(); vocab.len()];
        let mut df = vec![0; vocab.len()];
        let mut idf = vec![0.0; vocab.len()];
        for (term, e) in vocab {
            let slot = e.id as usize;
            if slot >= terms.len() || !terms[slot].is_empty() {
                return Err(integrity(VOCAB, format!("bad term id {}", e.id)));
            }
            terms[slot] = term;
            df[slot] = e.df;
            idf[slot] = e.idf;
        }
        let vectors: Vec<VectorLine> = read_jsonl(VECTORS, &read_checked(VECTORS)?)?;
        let vectors: Vec<(String, SparseVector)> = vectors
            .into_iter()
            .map(|v| (v.passage_id, v.weights))
            .collect();
        if vectors.iter().any(|(id, _)| store.passage(id).is_none()) {
            return Err(integrity(VECTORS, "vector for unknown passage"));
        }
        let model = TfIdfModel::from_parts(
            manifest.tokenizer,
            terms,
            df,
            idf,
            manifest.passages,
            vectors,
        )
        .map_err(|e| integrity(VECTORS, e))?;
        Ok(Self {
            store,
            model,
            manifest,
        })
    }
}

#[derive(Debug, Deserialize)]
struct VocabEntry {
    id: TermId,
    df: usize,
    idf: f64,
}

#[derive(Debug, Deserialize)]
struct VectorLine {
    passage_id: String,
    weights: Vec<(TermId, f64)>,
}

/// 17 significant digits in exponent form; a valid JSON number.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn jsonl<'a, T: Serialize + 'a>(items: impl Iterator<Item = &'a T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("record serializes");
        out.push(b'\n');
    }
    out
}

fn vocab_json(model: &TfIdfModel) -> Vec<u8> {
    let mut order: Vec<usize> = (0..model.vocab_len()).collect();
    order.sort_by(|&a, &b| model.terms()[a].cmp(&model.terms()[b]));
    let mut out = Vec::new();
    out.push(b'{');
    for (n, i) in order.into_iter().enumerate() {
        if n > 0 {
            out.push(b',');
        }
        let _ = write!(
            out,
            "\n  {}: {{\"df\": {}, \"id\": {}, \"idf\": {}}}",
            serde_json::to_string(&model.terms()[i]).expect("string serializes"),
            model.dfs()[i],
            i,
            fmt_f64(model.idfs()[i])
        );
    }
    out.extend_from_slice(b"\n}\n");
    out
}

fn vectors_jsonl(model: &TfIdfModel) -> Vec<u8> {
    let mut out = Vec::new();
    for (pid, v) in model.vectors() {
        let weights: Vec<String> = v
            .iter()
            .map(|(t, w)| format!("[{t},{}]", fmt_f64(*w)))
            .collect();
        let _ = writeln!(
            out,
            "{{\"passage_id\":{},\"weights\":[{}]}}",
            serde_json::to_string(pid).expect("string serializes"),
            weights.join(",")
        );
    }
    out
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(
    name: &str,
    bytes: &[u8],
) -> Result<Vec<T>, SnapshotError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(bytes).lines().enumerate() {
        let line = line.map_err(|e| integrity(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| integrity(name, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

fn io(path: &Path, source: std::io::Error) -> SnapshotError {
    SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn integrity(file: &str, reason: impl std::fmt::Display) -> SnapshotError {
    SnapshotError::Integrity {
        file: file.to_string(),
        reason: reason.to_string(),
    }
}
