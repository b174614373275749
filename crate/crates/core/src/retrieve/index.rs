use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_request, normalize_url, FcaRecord, RankedResult, RetrieveError, Retriever};
use crate::preprocess::normalized_words;

/// Scoring function for the local index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ranking {
    /// Cosine between raw-count TF-IDF vectors with `idf = ln(N / df)`.
    Tfidf,
    /// Okapi BM25 with `idf = ln((N - df + 0.5) / (df + 0.5) + 1)`.
    Bm25 { k1: f64, b: f64 },
}

impl Default for Ranking {
    fn default() -> Self {
        Ranking::Bm25 { k1: 1.5, b: 0.75 }
    }
}

impl Ranking {
    pub fn validate(&self) -> Result<(), RetrieveError> {
        match *self {
            Ranking::Tfidf => Ok(()),
            Ranking::Bm25 { k1, b } => {
                if !(k1 > 0.0 && k1.is_finite()) {
                    Err(RetrieveError::InvalidConfig(format!("BM25 k1 must be positive, got {k1}")))
                } else if !(0.0..=1.0).contains(&b) {
                    Err(RetrieveError::InvalidConfig(format!("BM25 b must lie in [0, 1], got {b}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn idf(&self, n_docs: usize, df: usize) -> f64 {
        let n = n_docs as f64;
        let df = df as f64;
        match self {
            Ranking::Tfidf => (n / df).ln(),
            Ranking::Bm25 { .. } => ((n - df + 0.5) / (df + 0.5) + 1.0).ln(),
        }
    }
}

#[derive(Debug)]
struct Doc {
    record: FcaRecord,
    len: usize,
    /// L2 norm of the TF-IDF vector; only used by [`Ranking::Tfidf`].
    norm: f64,
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// Immutable in-memory inverted index over fact-check summaries.
#[derive(Debug)]
pub struct LocalIndex {
    ranking: Ranking,
    docs: Vec<Doc>,
    postings: HashMap<String, Vec<Posting>>,
    avg_len: f64,
}

/// Normalizes URLs, rejects collisions, and indexes each record's summary
/// with the base normalization analyzer.
pub fn build_index(records: Vec<FcaRecord>, ranking: Ranking) -> Result<LocalIndex, RetrieveError> {
    ranking.validate()?;
    if records.is_empty() {
        return Err(RetrieveError::EmptyCorpus);
    }
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(records.len());
    let mut docs = Vec::with_capacity(records.len());
    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    for (i, mut record) in records.into_iter().enumerate() {
        record.url = normalize_url(&record.url)?;
        if let Some(&first) = seen.get(&record.url) {
            return Err(RetrieveError::DuplicateUrl {
                url: record.url,
                first,
                second: i,
            });
        }
        seen.insert(record.url.clone(), i);

        let terms = normalized_words(&record.scr);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for term in &terms {
            *tf.entry(term.clone()).or_default() += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting {
                doc: i as u32,
                tf: count,
            });
        }
        docs.push(Doc {
            record,
            len: terms.len(),
            norm: 0.0,
        });
    }
    let avg_len = docs.iter().map(|d| d.len as f64).sum::<f64>() / docs.len() as f64;
    let mut index = LocalIndex {
        ranking,
        docs,
        postings,
        avg_len,
    };
    if ranking == Ranking::Tfidf {
        let mut sq = vec![0.0f64; index.docs.len()];
        for list in index.postings.values() {
            let idf = ranking.idf(index.docs.len(), list.len());
            for p in list {
                let w = p.tf as f64 * idf;
                sq[p.doc as usize] += w * w;
            }
        }
        for (doc, s) in index.docs.iter_mut().zip(sq) {
            doc.norm = s.sqrt();
        }
    }
    Ok(index)
}

impl LocalIndex {
    pub fn ranking(&self) -> Ranking {
        self.ranking
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_len
    }

    pub fn records(&self) -> impl Iterator<Item = &FcaRecord> {
        self.docs.iter().map(|d| &d.record)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// IDF under this index's ranking; `None` for unseen terms.
    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = self.document_frequency(term);
        (df > 0).then(|| self.ranking.idf(self.docs.len(), df))
    }

    /// Score of every document for an analyzed query, in document order.
    pub fn scores(&self, query_terms: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0f64; self.docs.len()];
        match self.ranking {
            Ranking::Bm25 { k1, b } => {
                for term in query_terms {
                    let Some(list) = self.postings.get(term) else { continue };
                    let idf = self.ranking.idf(self.docs.len(), list.len());
                    for p in list {
                        let tf = p.tf as f64;
                        let len_ratio = if self.avg_len > 0.0 {
                            self.docs[p.doc as usize].len as f64 / self.avg_len
                        } else {
                            1.0
                        };
                        scores[p.doc as usize] +=
                            idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_ratio));
                    }
                }
            }
            Ranking::Tfidf => {
                let mut qtf: HashMap<&str, u32> = HashMap::new();
                for term in query_terms {
                    *qtf.entry(term.as_str()).or_default() += 1;
                }
                let mut q_norm_sq = 0.0;
                for (term, count) in &qtf {
                    let Some(list) = self.postings.get(*term) else { continue };
                    let idf = self.ranking.idf(self.docs.len(), list.len());
                    let qw = *count as f64 * idf;
                    q_norm_sq += qw * qw;
                    for p in list {
                        scores[p.doc as usize] += qw * p.tf as f64 * idf;
                    }
                }
                let q_norm = q_norm_sq.sqrt();
                for (score, doc) in scores.iter_mut().zip(&self.docs) {
                    if *score != 0.0 {
                        *score /= q_norm * doc.norm;
                    }
                }
            }
        }
        scores
    }
}

impl Retriever for LocalIndex {
    /// Positive-score documents by descending score, ties broken by
    /// ascending URL.
    fn search(&self, query: &str, limit: usize) -> Result<Vec<RankedResult>, RetrieveError> {
        check_request(query, limit)?;
        let terms = normalized_words(query);
        let scores = self.scores(&terms);
        let mut hits: Vec<(usize, f64)> = scores
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s > 0.0)
            .collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.docs[a.0].record.url.cmp(&self.docs[b.0].record.url))
        });
        Ok(hits
            .into_iter()
            .take(limit)
            .enumerate()
            .map(|(i, (doc, score))| {
                let record = &self.docs[doc].record;
                RankedResult {
                    url: record.url.clone(),
                    rank: i + 1,
                    score: Some(score),
                    publisher: (!record.publisher.is_empty()).then(|| record.publisher.clone()),
                    rating: record.verdict.clone(),
                }
            })
            .collect())
    }
}

/// Parses a JSON Lines corpus of [`FcaRecord`]s. Blank lines are skipped;
/// records with an empty summary or an unparsable URL are errors.
pub fn parse_corpus(text: &str) -> Result<Vec<FcaRecord>, RetrieveError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| RetrieveError::Corpus {
            line: idx + 1,
            message,
        };
        let mut record: FcaRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if record.scr.trim().is_empty() {
            return Err(err("empty scr".into()));
        }
        record.url = normalize_url(&record.url).map_err(|e| err(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<FcaRecord>, RetrieveError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}
