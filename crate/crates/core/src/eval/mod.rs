//! Retrieval and summary-quality metrics.

mod bleu;
mod ranking;
mod report;
mod similarity;

use thiserror::Error;

pub use bleu::{bleu4, bleu4_with, corpus_bleu4, sentence_bleu, BleuScore, Smoothing};
pub use ranking::{mrr, recall_at_k, recall_curve, MetricsReport, QueryOutcome};
pub use report::{curve_csv, ResultGrid};
pub use similarity::{similarity_buckets, tfidf_cosine, TfidfModel};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no query outcomes to evaluate")]
    NoOutcomes,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("query {0} has gold rank 0; ranks are 1-based")]
    InvalidRank(String),
    #[error("IDF corpus is empty")]
    EmptyCorpus,
    #[error("no text pairs to compare")]
    NoPairs,
    #[error("thresholds must be ascending values in [0, 1]: {0:?}")]
    InvalidThresholds(Vec<f64>),
    #[error("n-gram order must be 1 or 2, got {0}")]
    InvalidNgram(usize),
}
