use std::collections::{HashMap, HashSet};

use super::EvalError;
use crate::preprocess::normalized_words;

/// Word-level TF-IDF weighting fitted on a corpus.
///
/// Features are all word n-grams of order `1..=ngram` after base
/// normalization. Weights are raw counts times the smoothed
/// `idf = ln((1 + N) / (1 + df)) + 1`, so every term, including ones absent
/// from the corpus, keeps a positive weight.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    n_docs: usize,
    ngram: usize,
    df: HashMap<String, usize>,
}

fn features(text: &str, ngram: usize) -> Vec<String> {
    let words = normalized_words(text);
    let mut out = Vec::new();
    for n in 1..=ngram {
        out.extend(words.windows(n).map(|w| w.join(" ")));
    }
    out
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[S], ngram: usize) -> Result<Self, EvalError> {
        if !(1..=2).contains(&ngram) {
            return Err(EvalError::InvalidNgram(ngram));
        }
        if corpus.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            let unique: HashSet<String> = features(doc.as_ref(), ngram).into_iter().collect();
            for term in unique {
                *df.entry(term).or_default() += 1;
            }
        }
        Ok(Self {
            n_docs: corpus.len(),
            ngram,
            df,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    pub fn vector(&self, text: &str) -> HashMap<String, f64> {
        let mut counts: HashMap<String, f64> = HashMap::new();
        for f in features(text, self.ngram) {
            *counts.entry(f).or_default() += 1.0;
        }
        for (term, w) in counts.iter_mut() {
            *w *= self.idf(term);
        }
        counts
    }

    /// Cosine of the two TF-IDF vectors, in `[0, 1]`; 0 if either is empty.
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        let norm = |v: &HashMap<String, f64>| {
            let mut terms: Vec<_> = v.iter().collect();
            terms.sort_by(|x, y| x.0.cmp(y.0));
            terms.iter().map(|(_, w)| *w * *w).sum::<f64>().sqrt()
        };
        let (na, nb) = (norm(&va), norm(&vb));
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let (small, large) = if va.len() <= vb.len() { (&va, &vb) } else { (&vb, &va) };
        let mut shared: Vec<(&String, f64)> = small
            .iter()
            .filter_map(|(t, w)| large.get(t).map(|w2| (t, w * w2)))
            .collect();
        shared.sort_by(|x, y| x.0.cmp(y.0));
        let dot: f64 = shared.iter().map(|(_, p)| p).sum();
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Unigram TF-IDF cosine with IDF fitted on `idf_corpus`.
pub fn tfidf_cosine<S: AsRef<str>>(doc_a: &str, doc_b: &str, idf_corpus: &[S]) -> Result<f64, EvalError> {
    Ok(TfidfModel::fit(idf_corpus, 1)?.cosine(doc_a, doc_b))
}

/// For each threshold, the fraction of pairs whose cosine is at least that
/// threshold.
pub fn similarity_buckets<A: AsRef<str>, B: AsRef<str>>(
    pairs: &[(A, B)],
    thresholds: &[f64],
    model: &TfidfModel,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoPairs);
    }
    let sorted = thresholds.windows(2).all(|w| w[0] <= w[1]);
    if !sorted || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(EvalError::InvalidThresholds(thresholds.to_vec()));
    }
    let sims: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| model.cosine(a.as_ref(), b.as_ref()))
        .collect();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let above = sims.iter().filter(|s| **s >= t).count();
            (t, above as f64 / sims.len() as f64)
        })
        .collect())
}
