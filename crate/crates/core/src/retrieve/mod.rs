//! Fact-check retrieval: a remote ClaimReview search API or a local ranked
//! index over fact-check records, plus gold matching on normalized URLs.

mod index;
mod remote;
mod urlnorm;

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{build_index, load_corpus, parse_corpus, LocalIndex, Ranking};
pub use remote::{RateLimiter, RemoteClient, RemoteConfig, API_KEY_ENV, DEFAULT_BASE_URL};
pub use urlnorm::normalize_url;

pub const MAX_LIMIT: usize = 100;

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error("invalid URL '{url}': {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("query is empty")]
    EmptyQuery,
    #[error("limit must be between 1 and {MAX_LIMIT}, got {0}")]
    InvalidLimit(usize),
    #[error("invalid retriever configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot build an index from an empty collection")]
    EmptyCorpus,
    #[error("records {first} and {second} both normalize to {url}")]
    DuplicateUrl {
        url: String,
        first: usize,
        second: usize,
    },
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("rate limited by the search API (retry after {retry_after:?}) after {attempts} attempt(s)")]
    Throttled {
        retry_after: Option<Duration>,
        attempts: u32,
    },
    #[error("search API returned {status}: {message}")]
    Api { status: u16, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RetrieveError {
    /// Failures that a later attempt could plausibly fix.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            RetrieveError::Transport { .. } | RetrieveError::Throttled { .. } | RetrieveError::Api { .. }
        )
    }
}

/// A previously fact-checked article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcaRecord {
    pub url: String,
    /// Publisher-written summary of the reviewed claim.
    pub scr: String,
    #[serde(default)]
    pub publisher: String,
    #[serde(default)]
    pub site: String,
    #[serde(default)]
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub url: String,
    /// 1-based.
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<String>,
}

/// A fact-check search backend.
pub trait Retriever: Send + Sync {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<RankedResult>, RetrieveError>;
}

pub(crate) fn check_request(query: &str, limit: usize) -> Result<(), RetrieveError> {
    if query.trim().is_empty() {
        return Err(RetrieveError::EmptyQuery);
    }
    if limit == 0 || limit > MAX_LIMIT {
        return Err(RetrieveError::InvalidLimit(limit));
    }
    Ok(())
}

/// Runs `query` against any retriever.
pub fn search(
    query: &str,
    backend: &dyn Retriever,
    limit: usize,
) -> Result<Vec<RankedResult>, RetrieveError> {
    backend.search(query, limit)
}

/// Smallest rank whose URL is one of the gold URLs.
pub fn match_gold(results: &[RankedResult], gold_urls: &HashSet<String>) -> Option<usize> {
    results
        .iter()
        .filter(|r| gold_urls.contains(&r.url))
        .map(|r| r.rank)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results(urls: &[&str]) -> Vec<RankedResult> {
        urls.iter()
            .enumerate()
            .map(|(i, u)| RankedResult {
                url: (*u).to_owned(),
                rank: i + 1,
                score: None,
                publisher: None,
                rating: None,
            })
            .collect()
    }

    fn gold(urls: &[&str]) -> HashSet<String> {
        urls.iter().map(|u| (*u).to_owned()).collect()
    }

    #[test]
    fn gold_matching() {
        let r = results(&["a", "b", "c", "d"]);
        assert_eq!(match_gold(&r, &gold(&["a"])), Some(1));
        assert_eq!(match_gold(&r, &gold(&["z"])), None);
        assert_eq!(match_gold(&r, &gold(&["d", "b"])), Some(2));
        assert_eq!(match_gold(&[], &gold(&["a"])), None);
    }

    #[test]
    fn request_validation() {
        assert!(matches!(check_request("  ", 5), Err(RetrieveError::EmptyQuery)));
        assert!(matches!(check_request("q", 0), Err(RetrieveError::InvalidLimit(0))));
        assert!(matches!(check_request("q", 101), Err(RetrieveError::InvalidLimit(101))));
        assert!(check_request("q", 100).is_ok());
    }
}
