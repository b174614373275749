use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::preprocess::normalized_words;

/// How zero n-gram precisions are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Any zero precision yields a score of 0.
    None,
    /// Add one to numerator and denominator of an order-2+ precision only
    /// when its match count is zero.
    #[default]
    AddOneWhenZero,
    /// Add one to numerator and denominator of every order-2+ precision.
    LinOch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0 to 100.
    pub score: f64,
    /// Set when the candidate had no tokens; `score` is then 0.
    pub empty_candidate: bool,
}

fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in words.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU-4 over pre-tokenized word sequences.
pub fn sentence_bleu(candidate: &[String], reference: &[String], smoothing: Smoothing) -> BleuScore {
    if candidate.is_empty() {
        warn!("BLEU requested for an empty candidate; scoring 0");
        return BleuScore {
            score: 0.0,
            empty_candidate: true,
        };
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = ngram_counts(candidate, n);
        let refc = ngram_counts(reference, n);
        let matches: usize = cand
            .iter()
            .map(|(g, c)| (*c).min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let total = candidate.len().saturating_sub(n - 1);
        let (num, den) = match smoothing {
            Smoothing::LinOch if n >= 2 => (matches as f64 + 1.0, total as f64 + 1.0),
            Smoothing::AddOneWhenZero if n >= 2 && matches == 0 => (1.0, total as f64 + 1.0),
            _ => (matches as f64, total.max(1) as f64),
        };
        if num == 0.0 {
            return BleuScore {
                score: 0.0,
                empty_candidate: false,
            };
        }
        log_sum += 0.25 * (num / den).ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    BleuScore {
        score: 100.0 * bp * log_sum.exp(),
        empty_candidate: false,
    }
}

/// BLEU-4 of two raw texts after base normalization, with the given smoothing.
pub fn bleu4_with(candidate: &str, reference: &str, smoothing: Smoothing) -> BleuScore {
    sentence_bleu(&normalized_words(candidate), &normalized_words(reference), smoothing)
}

/// BLEU-4 on the 0 to 100 scale with the default smoothing.
pub fn bleu4(candidate: &str, reference: &str) -> f64 {
    bleu4_with(candidate, reference, Smoothing::default()).score
}

/// Macro-average of sentence scores over `(candidate, reference)` pairs.
/// Returns `None` for an empty list.
pub fn corpus_bleu4<A: AsRef<str>, B: AsRef<str>>(pairs: &[(A, B)], smoothing: Smoothing) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let total: f64 = pairs
        .iter()
        .map(|(c, r)| bleu4_with(c.as_ref(), r.as_ref(), smoothing).score)
        .sum();
    Some(total / pairs.len() as f64)
}
