//! SQuAD 2.0 datasets: parsing (nested or flat), validation, canonical
//! serialization, seeded splits and relevance judgments.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::corpus::{clean_text, DocumentStore};
use crate::text::{char_len, char_slice};

#[derive(Debug, Error)]
pub enum SquadError {
    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field error at {path}{}: {message}", .id.as_ref().map(|i| format!(" (id {i})")).unwrap_or_default())]
    Field {
        path: String,
        id: Option<String>,
        message: String,
    },
    #[error("dataset is invalid: {0}")]
    Invalid(Violation),
    #[error("dataset too small to split: {0} examples")]
    TooSmall(usize),
    #[error("split ratios must be positive and finite")]
    BadRatios,
    #[error("cannot resolve a relevant document for: {}", .0.join(", "))]
    Ambiguous(Vec<String>),
    #[error("unknown document id {doc_id:?} for example {id}")]
    UnknownDocument { id: String, doc_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    pub answer_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquadExample {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answers: Vec<SquadAnswer>,
    pub is_impossible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document_id: Option<String>,
}

impl SquadExample {
    pub fn gold_texts(&self) -> Vec<String> {
        self.answers.iter().map(|a| a.text.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquadDataset {
    pub version: String,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
    pub data: Vec<SquadExample>,
}

impl SquadDataset {
    pub fn examples(&self) -> &[SquadExample] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at id {}", self.reason, self.id)
    }
}

pub fn parse(bytes: &[u8]) -> Result<SquadDataset, SquadError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| SquadError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| field_err("$", None, "expected an object"))?;
    let version = obj
        .get("version")
        .and_then(Value::as_str)
        .unwrap_or("v2.0")
        .to_string();
    let provenance = match obj.get("provenance") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| field_err("$.provenance", None, &e.to_string()))?,
    };
    let data = obj
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| field_err("$.data", None, "missing array"))?;

    let nested = data.iter().any(|d| d.get("paragraphs").is_some());
    let mut examples = Vec::new();
    if nested {
        for (ai, article) in data.iter().enumerate() {
            let apath = format!("$.data[{ai}]");
            let art_doc = doc_id_of(article);
            let paras = article
                .get("paragraphs")
                .and_then(Value::as_array)
                .ok_or_else(|| field_err(&format!("{apath}.paragraphs"), None, "missing array"))?;
            for (pi, para) in paras.iter().enumerate() {
                let ppath = format!("{apath}.paragraphs[{pi}]");
                let context = req_str(para, "context", &ppath, None)?;
                let para_doc = doc_id_of(para).or_else(|| art_doc.clone());
                let qas = para
                    .get("qas")
                    .and_then(Value::as_array)
                    .ok_or_else(|| field_err(&format!("{ppath}.qas"), None, "missing array"))?;
                for (qi, qa) in qas.iter().enumerate() {
                    let qpath = format!("{ppath}.qas[{qi}]");
                    let mut ex = parse_qa(qa, &qpath, Some(&context))?;
                    if ex.document_id.is_none() {
                        ex.document_id = para_doc.clone();
                    }
                    examples.push(ex);
                }
            }
        }
    } else {
        for (i, item) in data.iter().enumerate() {
            examples.push(parse_qa(item, &format!("$.data[{i}]"), None)?);
        }
    }
    Ok(SquadDataset {
        version,
        provenance,
        data: examples,
    })
}

fn field_err(path: &str, id: Option<&str>, message: &str) -> SquadError {
    SquadError::Field {
        path: path.to_string(),
        id: id.map(String::from),
        message: message.to_string(),
    }
}

fn req_str(v: &Value, key: &str, path: &str, id: Option<&str>) -> Result<String, SquadError> {
    match v.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(field_err(&format!("{path}.{key}"), id, "expected a string")),
        None => Err(field_err(
            &format!("{path}.{key}"),
            id,
            "missing required field",
        )),
    }
}

fn doc_id_of(v: &Value) -> Option<String> {
    match v.get("document_id")? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_qa(qa: &Value, path: &str, context: Option<&str>) -> Result<SquadExample, SquadError> {
    let id = match qa.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => {
            return Err(field_err(
                &format!("{path}.id"),
                None,
                "missing required field",
            ))
        }
    };
    let question = req_str(qa, "question", path, Some(&id))?;
    let context = match context {
        Some(c) => c.to_string(),
        None => req_str(qa, "context", path, Some(&id))?,
    };
    let is_impossible = match qa.get("is_impossible") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            return Err(field_err(
                &format!("{path}.is_impossible"),
                Some(&id),
                "expected a boolean",
            ))
        }
    };
    let answers = match qa.get("answers") {
        Some(Value::Array(list)) => list
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let apath = format!("{path}.answers[{i}]");
                let text = req_str(a, "text", &apath, Some(&id))?;
                let answer_start =
                    a.get("answer_start")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| {
                            field_err(
                                &format!("{apath}.answer_start"),
                                Some(&id),
                                "missing non-negative integer",
                            )
                        })? as usize;
                Ok(SquadAnswer { text, answer_start })
            })
            .collect::<Result<Vec<_>, SquadError>>()?,
        None if is_impossible => Vec::new(),
        _ => {
            return Err(field_err(
                &format!("{path}.answers"),
                Some(&id),
                "missing required field",
            ))
        }
    };
    Ok(SquadExample {
        id,
        question,
        context,
        answers,
        is_impossible,
        document_id: doc_id_of(qa),
    })
}

/// Lists every invariant violation; an empty list means the dataset is valid.
pub fn validate(dataset: &SquadDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for ex in &dataset.data {
        let v = |reason: String| Violation {
            id: ex.id.clone(),
            reason,
        };
        if !seen.insert(ex.id.as_str()) {
            out.push(v("duplicate id".into()));
        }
        if ex.is_impossible && !ex.answers.is_empty() {
            out.push(v("impossible example carries answers".into()));
        }
        if !ex.is_impossible && ex.answers.is_empty() {
            out.push(v("answerable example has no answers".into()));
        }
        for a in &ex.answers {
            let end = a.answer_start + char_len(&a.text);
            match char_slice(&ex.context, a.answer_start, end) {
                None => out.push(v(format!("answer_start {} out of range", a.answer_start))),
                Some(s) if s != a.text => out.push(v("answer text mismatch".into())),
                Some(_) => {}
            }
        }
    }
    out
}

/// Canonical flat JSON with sorted keys; refuses invalid datasets.
pub fn serialize(dataset: &SquadDataset) -> Result<Vec<u8>, SquadError> {
    if let Some(first) = validate(dataset).into_iter().next() {
        return Err(SquadError::Invalid(first));
    }
    let value: Value = serde_json::to_value(dataset).expect("dataset serializes");
    let mut bytes = serde_json::to_vec_pretty(&sort_keys(value)).expect("value serializes");
    bytes.push(b'\n');
    Ok(bytes)
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<String, Value> =
                m.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Split proportions; normalized to sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 70.0,
            val: 15.0,
            test: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: SquadDataset,
    pub val: SquadDataset,
    pub test: SquadDataset,
}

/// Seeded shuffle then partition: `floor(n * train)`, `floor(n * val)`, and
/// the remainder to test.
pub fn split(
    dataset: &SquadDataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit, SquadError> {
    let SplitRatios { train, val, test } = ratios;
    if [train, val, test]
        .iter()
        .any(|r| !(r.is_finite() && *r > 0.0))
    {
        return Err(SquadError::BadRatios);
    }
    let n = dataset.data.len();
    if n < 3 {
        return Err(SquadError::TooSmall(n));
    }
    let total = train + val + test;
    let n_train = ((n as f64 * train) / total).floor() as usize;
    let n_val = ((n as f64 * val) / total).floor() as usize;

    let mut shuffled = dataset.data.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let rest = shuffled.split_off(n_train);
    let (val_part, test_part) = rest.split_at(n_val.min(rest.len()));
    let part = |name: &str, data: Vec<SquadExample>| {
        let mut provenance = dataset.provenance.clone();
        provenance.insert("split".into(), name.into());
        SquadDataset {
            version: dataset.version.clone(),
            provenance,
            data,
        }
    };
    Ok(DatasetSplit {
        train: part("train", shuffled),
        val: part("val", val_part.to_vec()),
        test: part("test", test_part.to_vec()),
    })
}

/// Relevance judgments: question id → relevant document ids.
pub type Qrels = BTreeMap<String, BTreeSet<String>>;

/// One relevant document per question: the example's `document_id` when
/// present, otherwise the single stored document containing its (cleaned)
/// context verbatim.
pub fn to_qrels(dataset: &SquadDataset, store: &DocumentStore) -> Result<Qrels, SquadError> {
    let mut qrels = Qrels::new();
    let mut unresolved = Vec::new();
    for ex in &dataset.data {
        let doc_id = match &ex.document_id {
            Some(d) => {
                if store.get_document(d).is_err() {
                    return Err(SquadError::UnknownDocument {
                        id: ex.id.clone(),
                        doc_id: d.clone(),
                    });
                }
                d.clone()
            }
            None => {
                let needle = clean_text(&ex.context);
                let mut hits = store
                    .documents()
                    .filter(|d| !needle.is_empty() && d.text.contains(&needle));
                match (hits.next(), hits.next()) {
                    (Some(d), None) => d.doc_id.clone(),
                    _ => {
                        unresolved.push(ex.id.clone());
                        continue;
                    }
                }
            }
        };
        qrels.insert(ex.id.clone(), BTreeSet::from([doc_id]));
    }
    if !unresolved.is_empty() {
        return Err(SquadError::Ambiguous(unresolved));
    }
    Ok(qrels)
}
