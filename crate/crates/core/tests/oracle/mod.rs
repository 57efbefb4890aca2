//! Brute-force reference implementations. Deliberately naive: dense vectors,
//! full enumeration, no shared code with the library beyond its public types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

/// Lowercased maximal alphanumeric runs with char offsets.
pub fn words(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        if c.is_alphanumeric() {
            if cur.is_empty() {
                start = i;
            }
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push((std::mem::take(&mut cur), start, i));
        }
    }
    if !cur.is_empty() {
        out.push((cur, start, n));
    }
    out
}

pub fn idf_table(passages: &[(String, String)]) -> BTreeMap<String, f64> {
    let n = passages.len() as f64;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for (_, text) in passages {
        let distinct: BTreeSet<String> = words(text).into_iter().map(|w| w.0).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    df.into_iter()
        .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
        .collect()
}

fn dense(text: &str, vocab: &[String], idf: &BTreeMap<String, f64>) -> Vec<f64> {
    let terms: Vec<String> = words(text).into_iter().map(|w| w.0).collect();
    let mut v: Vec<f64> = vocab
        .iter()
        .map(|t| terms.iter().filter(|x| *x == t).count() as f64 * idf[t])
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Cosine score of every passage against the query, zero scores included.
pub fn tfidf_scores(passages: &[(String, String)], query: &str) -> BTreeMap<String, f64> {
    let idf = idf_table(passages);
    let vocab: Vec<String> = idf.keys().cloned().collect();
    let q = dense(query, &vocab, &idf);
    passages
        .iter()
        .map(|(id, text)| {
            let d = dense(text, &vocab, &idf);
            (
                id.clone(),
                q.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>(),
            )
        })
        .collect()
}

/// Best span by exhaustive enumeration: max score, then earliest start,
/// then shortest. Returns (raw score, char start, char end).
pub fn best_span(
    query_idf: &BTreeMap<String, f64>,
    text: &str,
    cap: usize,
) -> Option<(f64, usize, usize)> {
    let toks = words(text);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..toks.len() {
        for j in i..toks.len().min(i + cap) {
            let inside: BTreeSet<&str> = toks[i..=j].iter().map(|t| t.0.as_str()).collect();
            let sum: f64 = query_idf
                .iter()
                .filter(|(t, _)| inside.contains(t.as_str()))
                .map(|(_, w)| w)
                .sum();
            let s = sum / ((j - i + 1) as f64).sqrt();
            if s > 0.0 && best.is_none_or(|b| s > b.0) {
                best = Some((s, toks[i].1, toks[j].2));
            }
        }
    }
    best
}

const WORDS: &[&str] = &[
    "virus",
    "fever",
    "cough",
    "vaccine",
    "cell",
    "protein",
    "spike",
    "lung",
    "patient",
    "trial",
    "dose",
    "risk",
    "child",
    "infection",
    "mask",
    "test",
    "antibody",
    "immune",
    "response",
    "study",
    "the",
    "of",
    "and",
    "in",
];

pub fn random_text<R: Rng>(rng: &mut R, max_tokens: usize) -> String {
    let n = rng.random_range(1..=max_tokens);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// At most `max_passages` passages of at most `max_tokens` words each.
pub fn random_corpus<R: Rng>(
    rng: &mut R,
    max_passages: usize,
    max_tokens: usize,
) -> Vec<(String, String)> {
    let n = rng.random_range(1..=max_passages);
    (0..n)
        .map(|i| (format!("p{i:02}"), random_text(rng, max_tokens)))
        .collect()
}
