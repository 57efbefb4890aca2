//! Word tokenization with character offsets and SQuAD-style answer
//! normalization.
//!
//! All offsets in this crate are counted in Unicode scalar values and are
//! half-open: `[start, end)`.

use serde::{Deserialize, Serialize};

/// A normalized word together with its location in the source string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub term: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn len(&self) -> usize {
        self.char_end - self.char_start
    }

    pub fn is_empty(&self) -> bool {
        self.char_start == self.char_end
    }
}

/// Index-time tokenizer.
///
/// Words are maximal runs of alphanumeric characters. When `split_hyphens` is
/// false, a hyphen joining two alphanumeric runs is kept inside the word
/// (`covid-19` stays one term).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub split_hyphens: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            split_hyphens: true,
        }
    }
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if !chars[i].is_alphanumeric() {
                i += 1;
                continue;
            }
            let start = i;
            while i < chars.len() {
                let joined_hyphen = !self.split_hyphens
                    && chars[i] == '-'
                    && i + 1 < chars.len()
                    && chars[i + 1].is_alphanumeric();
                if chars[i].is_alphanumeric() || joined_hyphen {
                    i += 1;
                } else {
                    break;
                }
            }
            let term: String = chars[start..i].iter().collect::<String>().to_lowercase();
            tokens.push(Token {
                term,
                char_start: start,
                char_end: i,
            });
        }
        tokens
    }
}

/// Tokenizes with the default configuration (hyphens split words).
pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}

/// Lowercase, strip ASCII punctuation, drop the articles `a`/`an`/`the` and
/// collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// An element of a fixed-length sequence: either a real item or padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot<T> {
    Item(T),
    Pad,
}

impl<T> Slot<T> {
    pub fn item(&self) -> Option<&T> {
        match self {
            Slot::Item(t) => Some(t),
            Slot::Pad => None,
        }
    }
}

/// Forces `items` to exactly `target_len` slots, keeping the prefix when too
/// long and appending [`Slot::Pad`] when too short.
pub fn truncate_or_pad<T: Clone>(items: &[T], target_len: usize) -> Vec<Slot<T>> {
    let mut out: Vec<Slot<T>> = items
        .iter()
        .take(target_len)
        .cloned()
        .map(Slot::Item)
        .collect();
    out.resize(target_len, Slot::Pad);
    out
}

/// Slices `s` by character offsets. Returns `None` when out of range or
/// `start > end`.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(s.len()));
    let b_start = indices.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[b_start..b_end])
}

/// Number of Unicode scalar values in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}
