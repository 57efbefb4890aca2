//! Retriever and reader evaluation: precision/recall/MRR at k, exact match,
//! answer accuracy and semantic answer similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Pipeline, PipelineError, QueryRequest, ResultRow};
use crate::reader::Answer;
use crate::squad::{to_qrels, Qrels, SquadDataset, SquadError, SquadExample};
use crate::text::normalize_answer;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric is undefined: {0}")]
    Undefined(&'static str),
    #[error("aligned inputs differ in length: {0} vs {1}")]
    Alignment(usize, usize),
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Qrels(#[from] SquadError),
    #[error("query {id}: {source}")]
    Query {
        id: String,
        #[source]
        source: PipelineError,
    },
    #[error("scorer failed: {0}")]
    Scorer(String),
}

/// `|relevant ∩ top-k| / k`; missing slots count as irrelevant.
pub fn precision_at_k<T: Eq + Hash + Ord>(ranked: &[T], relevant: &BTreeSet<T>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(ranked, relevant, k) as f64 / k as f64
}

/// `|relevant ∩ top-k| / |relevant|`; undefined for an empty relevant set.
pub fn recall_at_k<T: Eq + Hash + Ord>(
    ranked: &[T],
    relevant: &BTreeSet<T>,
    k: usize,
) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::Undefined("recall with no relevant documents"));
    }
    Ok(hits(ranked, relevant, k) as f64 / relevant.len() as f64)
}

fn hits<T: Eq + Hash + Ord>(ranked: &[T], relevant: &BTreeSet<T>, k: usize) -> usize {
    let mut seen = BTreeSet::new();
    ranked
        .iter()
        .take(k)
        .filter(|d| relevant.contains(*d) && seen.insert(*d))
        .count()
}

/// `1 / rank` of the first relevant item within the top k, else 0.
pub fn reciprocal_rank<T: Eq + Ord>(ranked: &[T], relevant: &BTreeSet<T>, k: usize) -> f64 {
    ranked
        .iter()
        .take(k)
        .position(|d| relevant.contains(d))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Mean reciprocal rank over queries. Queries without relevant documents are
/// skipped.
pub fn mrr_at_k(
    rankings: &BTreeMap<String, Vec<String>>,
    qrels: &Qrels,
    k: usize,
) -> Result<f64, EvalError> {
    let empty = Vec::new();
    let per_query: Vec<f64> = qrels
        .iter()
        .filter(|(_, rel)| !rel.is_empty())
        .map(|(q, rel)| reciprocal_rank(rankings.get(q).unwrap_or(&empty), rel, k))
        .collect();
    if per_query.is_empty() {
        return Err(EvalError::Undefined("mrr over an empty query set"));
    }
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}

/// 1.0 when the normalized prediction equals some normalized gold answer.
/// With no gold answers (unanswerable), an empty prediction matches.
pub fn exact_match(pred: &str, golds: &[String]) -> f64 {
    let p = normalize_answer(pred);
    let hit = if golds.is_empty() {
        p.is_empty()
    } else {
        golds.iter().any(|g| normalize_answer(g) == p)
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// F1 over normalized token multisets.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let pt: Vec<&str> = p.split_whitespace().collect();
    let gt: Vec<&str> = g.split_whitespace().collect();
    if pt.is_empty() || gt.is_empty() {
        return if pt.is_empty() && gt.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gt {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &pt {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pt.len() as f64;
    let recall = common as f64 / gt.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Graded similarity between a predicted and a gold answer, in `[0, 1]`.
pub trait SemanticScorer: Send + Sync {
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, EvalError>;
}

/// Built-in scorer: token F1.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenF1Scorer;

impl SemanticScorer for TokenF1Scorer {
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, EvalError> {
        Ok(pairs.iter().map(|(p, g)| token_f1(p, g)).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pairs: Vec<ScorePair>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScorePair {
    pub pred: String,
    pub gold: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

/// Scorer backed by an external `POST /score` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: format!("{}/score", base_url.trim_end_matches('/')),
            agent,
        }
    }
}

impl SemanticScorer for RemoteScorer {
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, EvalError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let req = ScoreRequest {
            pairs: pairs
                .iter()
                .map(|(p, g)| ScorePair {
                    pred: p.clone(),
                    gold: g.clone(),
                })
                .collect(),
        };
        let resp: ScoreResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(&req)
            .map_err(|e| EvalError::Scorer(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| EvalError::Scorer(e.to_string()))?;
        if resp.scores.len() != pairs.len() {
            return Err(EvalError::Scorer(format!(
                "expected {} scores, got {}",
                pairs.len(),
                resp.scores.len()
            )));
        }
        if let Some(s) = resp.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(EvalError::Scorer(format!("score {s} outside [0, 1]")));
        }
        Ok(resp.scores)
    }
}

/// Mean over examples of the best scorer value against that example's golds.
/// An example with no golds scores 1 for an empty prediction and 0 otherwise.
pub fn sas(
    preds: &[String],
    golds: &[Vec<String>],
    scorer: &dyn SemanticScorer,
) -> Result<f64, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::Alignment(preds.len(), golds.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::Undefined("sas over no examples"));
    }
    let mut pairs = Vec::new();
    let mut owner = Vec::new();
    for (i, (p, gs)) in preds.iter().zip(golds).enumerate() {
        for g in gs {
            pairs.push((p.clone(), g.clone()));
            owner.push(i);
        }
    }
    let scores = scorer.score_pairs(&pairs)?;
    let mut best: Vec<Option<f64>> = vec![None; preds.len()];
    for (i, s) in owner.into_iter().zip(scores) {
        best[i] = Some(best[i].map_or(s, |b: f64| b.max(s)));
    }
    let total: f64 = best
        .iter()
        .zip(preds)
        .map(|(b, p)| {
            b.unwrap_or(if normalize_answer(p).is_empty() {
                1.0
            } else {
                0.0
            })
        })
        .sum();
    Ok(total / preds.len() as f64)
}

/// Anything carrying a predicted answer.
pub trait Prediction {
    fn answer_text(&self) -> &str;
    fn is_no_answer(&self) -> bool;
}

impl Prediction for Answer {
    fn answer_text(&self) -> &str {
        &self.answer
    }

    fn is_no_answer(&self) -> bool {
        Answer::is_no_answer(self)
    }
}

impl Prediction for ResultRow {
    fn answer_text(&self) -> &str {
        &self.answer
    }

    fn is_no_answer(&self) -> bool {
        ResultRow::is_no_answer(self)
    }
}

/// Token-F1 threshold above which an answer to an answerable question counts
/// as correct.
pub const ACCURACY_F1_THRESHOLD: f64 = 0.5;

fn is_correct<P: Prediction>(pred: &P, ex: &SquadExample) -> bool {
    if ex.is_impossible {
        pred.is_no_answer()
    } else {
        !pred.is_no_answer()
            && ex
                .answers
                .iter()
                .any(|a| token_f1(pred.answer_text(), &a.text) >= ACCURACY_F1_THRESHOLD)
    }
}

pub fn answer_accuracy<P: Prediction>(
    preds: &[P],
    examples: &[SquadExample],
) -> Result<f64, EvalError> {
    if preds.len() != examples.len() {
        return Err(EvalError::Alignment(preds.len(), examples.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::Undefined("accuracy over no examples"));
    }
    let correct = preds
        .iter()
        .zip(examples)
        .filter(|(p, e)| is_correct(*p, e))
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrieverScores {
    pub precision: f64,
    pub recall: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReaderScores {
    pub em: f64,
    pub accuracy: f64,
    pub sas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub retriever: BTreeMap<usize, RetrieverScores>,
    pub reader: BTreeMap<usize, ReaderScores>,
}

pub const DEFAULT_KS: [usize; 3] = [5, 10, 20];

/// Evaluates retrieval and reading for each k. Retrieval metrics use the
/// top-k document ranking; reader metrics use the single best answer of a
/// full run with `retriever_top_k = k`.
pub fn evaluate(
    pipeline: &Pipeline,
    dataset: &SquadDataset,
    ks: &[usize],
    scorer: &dyn SemanticScorer,
) -> Result<EvalReport, EvalError> {
    if ks.contains(&0) {
        return Err(EvalError::InvalidK);
    }
    if dataset.is_empty() {
        return Err(EvalError::Undefined("evaluation over an empty dataset"));
    }
    let qrels = to_qrels(dataset, pipeline.store())?;
    let ks: BTreeSet<usize> = ks.iter().copied().collect();
    let examples = dataset.examples();
    let mut report = EvalReport {
        dataset: dataset
            .provenance
            .get("source")
            .cloned()
            .unwrap_or_else(|| "dataset".into()),
        retriever: BTreeMap::new(),
        reader: BTreeMap::new(),
    };

    for &k in &ks {
        let rankings: Vec<(String, Vec<String>)> = examples
            .par_iter()
            .map(|ex| {
                let docs =
                    pipeline
                        .retrieve(&ex.question, k)
                        .map_err(|source| EvalError::Query {
                            id: ex.id.clone(),
                            source,
                        })?;
                Ok((ex.id.clone(), docs.into_iter().map(|d| d.doc_id).collect()))
            })
            .collect::<Result<_, EvalError>>()?;

        let n = rankings.len() as f64;
        let precision = rankings
            .iter()
            .map(|(q, r)| precision_at_k(r, &qrels[q], k))
            .sum::<f64>()
            / n;
        let recalls: Vec<f64> = rankings
            .iter()
            .filter_map(|(q, r)| recall_at_k(r, &qrels[q], k).ok())
            .collect();
        let recall = if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        };
        let ranking_map: BTreeMap<String, Vec<String>> = rankings.into_iter().collect();
        let mrr = mrr_at_k(&ranking_map, &qrels, k).unwrap_or(0.0);
        report.retriever.insert(
            k,
            RetrieverScores {
                precision,
                recall,
                mrr,
            },
        );

        let best: Vec<ResultRow> = examples
            .par_iter()
            .map(|ex| {
                let request = QueryRequest::new(ex.question.clone()).with_k(k, 1);
                let rows = pipeline.run(&request).map_err(|source| EvalError::Query {
                    id: ex.id.clone(),
                    source,
                })?;
                Ok(rows
                    .into_iter()
                    .next()
                    .expect("pipeline returns at least one row"))
            })
            .collect::<Result<_, EvalError>>()?;

        let golds: Vec<Vec<String>> = examples.iter().map(SquadExample::gold_texts).collect();
        let preds: Vec<String> = best
            .iter()
            .map(|r| {
                if r.is_no_answer() {
                    String::new()
                } else {
                    r.answer.clone()
                }
            })
            .collect();
        let em = preds
            .iter()
            .zip(&golds)
            .map(|(p, g)| exact_match(p, g))
            .sum::<f64>()
            / n;
        let accuracy = answer_accuracy(&best, examples)?;
        let sas = sas(&preds, &golds, scorer)?;
        report.reader.insert(k, ReaderScores { em, accuracy, sas });
    }
    Ok(report)
}

impl EvalReport {
    /// Plain-text table: retriever and reader blocks, one column per k.
    pub fn render_table(&self) -> String {
        let ks: Vec<usize> = self.retriever.keys().copied().collect();
        let mut out = String::new();
        let header = |out: &mut String, title: &str, names: [&str; 3]| {
            let _ = write!(out, "{title:<10}");
            for name in names {
                for k in &ks {
                    let _ = write!(out, "{:>12}", format!("{name}@{k}"));
                }
            }
            out.push('\n');
        };
        header(&mut out, "Retriever", ["Recall", "MRR", "prec"]);
        let _ = write!(out, "{:<10}", self.dataset);
        for pick in [
            |s: &RetrieverScores| s.recall,
            |s: &RetrieverScores| s.mrr,
            |s: &RetrieverScores| s.precision,
        ] {
            for k in &ks {
                let _ = write!(out, "{:>12.3}", pick(&self.retriever[k]));
            }
        }
        out.push('\n');
        header(&mut out, "Reader", ["EM", "SAS", "acc"]);
        let _ = write!(out, "{:<10}", self.dataset);
        for pick in [
            |s: &ReaderScores| s.em,
            |s: &ReaderScores| s.sas,
            |s: &ReaderScores| s.accuracy,
        ] {
            for k in &ks {
                let v = self.reader.get(k).map(pick).unwrap_or(f64::NAN);
                let _ = write!(out, "{v:>12.3}");
            }
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::Offsets;
    use crate::squad::SquadAnswer;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn list(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precision_examples() {
        let ranked = list(&["d1", "d5", "d2"]);
        assert!((precision_at_k(&ranked, &set(&["d1", "d2"]), 3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(precision_at_k(&ranked, &set(&[]), 3), 0.0);
        assert_eq!(precision_at_k(&ranked, &set(&["d1", "d5", "d2"]), 3), 1.0);
        // short lists still divide by k
        assert_eq!(precision_at_k(&ranked, &set(&["d1"]), 10), 0.1);
    }

    #[test]
    fn recall_examples() {
        let ranked = list(&["d1", "d5", "d2"]);
        assert_eq!(recall_at_k(&ranked, &set(&["d1", "d2"]), 3).unwrap(), 1.0);
        assert_eq!(recall_at_k(&ranked, &set(&["d1", "d2"]), 1).unwrap(), 0.5);
        assert!(matches!(
            recall_at_k(&ranked, &set(&[]), 1),
            Err(EvalError::Undefined(_))
        ));
    }

    #[test]
    fn mrr_worked_example() {
        let rankings: BTreeMap<String, Vec<String>> = [
            ("q1".to_string(), list(&["rel1", "x"])),
            ("q2".to_string(), list(&["x", "rel2"])),
            ("q3".to_string(), list(&["x", "y"])),
        ]
        .into_iter()
        .collect();
        let qrels: Qrels = [("q1", "rel1"), ("q2", "rel2"), ("q3", "rel3")]
            .iter()
            .map(|(q, d)| (q.to_string(), set(&[d])))
            .collect();
        assert_eq!(reciprocal_rank(&rankings["q1"], &qrels["q1"], 10), 1.0);
        assert_eq!(reciprocal_rank(&rankings["q2"], &qrels["q2"], 10), 0.5);
        assert_eq!(reciprocal_rank(&rankings["q3"], &qrels["q3"], 10), 0.0);
        assert_eq!(mrr_at_k(&rankings, &qrels, 10).unwrap(), 0.5);
        assert!(mrr_at_k(&rankings, &Qrels::new(), 10).is_err());
    }

    #[test]
    fn exact_match_examples() {
        assert_eq!(exact_match("fever", &list(&["fever"])), 1.0);
        assert_eq!(exact_match("The Fever.", &list(&["fever"])), 1.0);
        assert_eq!(exact_match("fever and cough", &list(&["fever"])), 0.0);
        assert_eq!(exact_match("", &[]), 1.0);
        assert_eq!(exact_match("fever", &[]), 0.0);
    }

    #[test]
    fn token_f1_examples() {
        assert_eq!(token_f1("dry cough", "dry cough"), 1.0);
        assert_eq!(token_f1("fever", "cough"), 0.0);
        assert!((token_f1("fever and cough", "dry cough") - 0.4).abs() < 1e-15);
        assert_eq!(token_f1("", "the"), 1.0);
        assert_eq!(token_f1("", "cough"), 0.0);
    }

    struct Constant(f64);

    impl SemanticScorer for Constant {
        fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, EvalError> {
            Ok(vec![self.0; pairs.len()])
        }
    }

    #[test]
    fn sas_examples() {
        let preds = list(&["dry cough", "fever and cough"]);
        let golds = vec![list(&["dry cough"]), list(&["dry cough"])];
        assert_eq!(sas(&preds[..1], &golds[..1], &TokenF1Scorer).unwrap(), 1.0);
        assert_eq!(sas(&preds, &golds, &Constant(0.0)).unwrap(), 0.0);
        assert!((sas(&preds, &golds, &TokenF1Scorer).unwrap() - 0.7).abs() < 1e-15);
        assert!(matches!(
            sas(&preds, &golds[..1], &TokenF1Scorer),
            Err(EvalError::Alignment(2, 1))
        ));
        // best gold wins
        assert_eq!(
            sas(
                &list(&["cough"]),
                &[list(&["fever", "cough"])],
                &TokenF1Scorer
            )
            .unwrap(),
            1.0
        );
    }

    fn answer(text: &str, no_answer: bool) -> Answer {
        if no_answer {
            return Answer::no_answer(0.0);
        }
        Answer {
            answer: text.into(),
            kind: crate::reader::AnswerType::Extractive,
            score: 0.5,
            context: text.into(),
            meta: Default::default(),
            offsets_in_document: Offsets::new(0, text.chars().count()),
            offsets_in_context: Offsets::new(0, text.chars().count()),
            doc_id: "d".into(),
            passage_id: "p".into(),
        }
    }

    fn example(gold: Option<&str>) -> SquadExample {
        SquadExample {
            id: "q".into(),
            question: "q".into(),
            context: gold.unwrap_or("ctx").into(),
            answers: gold
                .map(|g| {
                    vec![SquadAnswer {
                        text: g.into(),
                        answer_start: 0,
                    }]
                })
                .unwrap_or_default(),
            is_impossible: gold.is_none(),
            document_id: None,
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(
            answer_accuracy(&[answer("fever", false)], &[example(Some("fever"))]).unwrap(),
            1.0
        );
        assert_eq!(
            answer_accuracy(&[answer("", true)], &[example(None)]).unwrap(),
            1.0
        );
        assert_eq!(
            answer_accuracy(
                &[answer("fever", false), answer("rash", false)],
                &[example(Some("fever")), example(Some("cough"))]
            )
            .unwrap(),
            0.5
        );
        assert!(answer_accuracy(&[answer("x", false)], &[]).is_err());
    }

    proptest! {
        #[test]
        fn recall_and_mrr_monotone_in_k(
            ranked in proptest::collection::vec(0u8..20, 0..25),
            relevant in proptest::collection::btree_set(0u8..20, 1..5),
        ) {
            let mut prev = (0.0, 0.0);
            for k in 1..30 {
                let r = recall_at_k(&ranked, &relevant, k).unwrap();
                let m = reciprocal_rank(&ranked, &relevant, k);
                prop_assert!(r >= prev.0 && m >= prev.1);
                prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&m));
                prev = (r, m);
            }
        }

        #[test]
        fn token_f1_symmetric_and_bounded(a in "[a-e ]{0,20}", b in "[a-e ]{0,20}") {
            let x = token_f1(&a, &b);
            prop_assert_eq!(x, token_f1(&b, &a));
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn exact_match_implies_full_f1(words in proptest::collection::vec("[a-z]{1,5}", 1..5)) {
            let gold = words.join(" ");
            let pred = format!("The {}.", gold.to_uppercase());
            prop_assert_eq!(exact_match(&pred, std::slice::from_ref(&gold)), 1.0);
            prop_assert_eq!(token_f1(&pred, &gold), 1.0);
        }
    }
}
