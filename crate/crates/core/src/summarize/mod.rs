//! Query generation: condensing a processed post into a short search query.
//!
//! Two backends exist. [`SummarizerSpec::TruncateK`] keeps the first `k`
//! words. [`SummarizerSpec::External`] sends the text and a
//! [`DecodingConfig`] to a model server over HTTP or to a subprocess over
//! line-delimited JSON (see [`external`]).

mod cache;
mod decoding;
pub mod external;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::CcrCache;
pub use decoding::{DecodingConfig, DecodingStrategy, WireDecoding};
pub use external::{HttpSummarizer, SubprocessSummarizer, SummarizeRequest, SummarizeResponse};

pub const DEFAULT_TRUNCATE_K: usize = 11;

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("invalid summarizer configuration: {0}")]
    InvalidConfig(String),
    #[error("summarizer backend error after {attempts} attempt(s): {message}")]
    Backend {
        message: String,
        retryable: bool,
        attempts: u32,
    },
    #[error("summarizer did not answer within {0:?}")]
    Timeout(Duration),
    #[error("CCR cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl SummarizeError {
    pub fn is_retryable(&self) -> bool {
        match self {
            SummarizeError::Backend { retryable, .. } => *retryable,
            SummarizeError::Timeout(_) => true,
            _ => false,
        }
    }
}

/// Where an external summarizer lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Http(String),
    Command(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SummarizerSpec {
    TruncateK { k: usize },
    External {
        endpoint: Endpoint,
        decoding: DecodingConfig,
    },
}

impl Default for SummarizerSpec {
    fn default() -> Self {
        SummarizerSpec::TruncateK {
            k: DEFAULT_TRUNCATE_K,
        }
    }
}

impl SummarizerSpec {
    pub fn validate(&self) -> Result<(), SummarizeError> {
        match self {
            SummarizerSpec::TruncateK { k: 0 } => {
                Err(SummarizeError::InvalidConfig("k must be at least 1".into()))
            }
            SummarizerSpec::TruncateK { .. } => Ok(()),
            SummarizerSpec::External { endpoint, decoding } => {
                let empty = match endpoint {
                    Endpoint::Http(url) | Endpoint::Command(url) => url.trim().is_empty(),
                };
                if empty {
                    return Err(SummarizeError::InvalidConfig("empty endpoint".into()));
                }
                decoding.validate()
            }
        }
    }

    /// Hex SHA-256 over a canonical rendering of every field. Any change to
    /// the backend or decoding settings changes the fingerprint.
    pub fn fingerprint(&self) -> String {
        let canonical = match self {
            SummarizerSpec::TruncateK { k } => serde_json::json!({ "truncate_k": k }),
            SummarizerSpec::External { endpoint, decoding } => serde_json::json!({
                "external": endpoint,
                "decoding": decoding.to_wire(),
            }),
        };
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

impl fmt::Display for SummarizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummarizerSpec::TruncateK { k } => write!(f, "Truncate{k}"),
            SummarizerSpec::External {
                endpoint: Endpoint::Http(url),
                decoding,
            } => write!(f, "http:{url} [{decoding}]"),
            SummarizerSpec::External {
                endpoint: Endpoint::Command(cmd),
                decoding,
            } => write!(f, "cmd:{cmd} [{decoding}]"),
        }
    }
}

/// A generated query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ccr {
    pub text: String,
    pub source_smc_id: String,
    pub spec_fingerprint: String,
}

/// Stable identifier for a piece of text the summarizer is asked about.
pub fn smc_id(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..12])
}

/// The first `min(k, word count)` whitespace-separated words, joined by
/// single spaces.
pub fn truncate_k(text: &str, k: usize) -> String {
    text.split_whitespace().take(k).collect::<Vec<_>>().join(" ")
}

/// Anything that can turn processed text into a query.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, text: &str) -> Result<String, SummarizeError>;
}

pub struct TruncateK(pub usize);

impl Summarizer for TruncateK {
    fn summarize(&self, text: &str) -> Result<String, SummarizeError> {
        Ok(truncate_k(text, self.0))
    }
}

/// Transport knobs for external backends; not part of the fingerprint.
#[derive(Debug, Clone, Copy)]
pub struct ExternalOptions {
    pub timeout: Duration,
    pub attempts: u32,
    pub backoff: Duration,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(30),
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Builds the backend a spec describes.
pub fn backend(
    spec: &SummarizerSpec,
    options: ExternalOptions,
) -> Result<Box<dyn Summarizer>, SummarizeError> {
    spec.validate()?;
    Ok(match spec {
        SummarizerSpec::TruncateK { k } => Box::new(TruncateK(*k)),
        SummarizerSpec::External {
            endpoint: Endpoint::Http(url),
            decoding,
        } => Box::new(HttpSummarizer::new(url, *decoding, options)?),
        SummarizerSpec::External {
            endpoint: Endpoint::Command(cmd),
            decoding,
        } => Box::new(SubprocessSummarizer::new(cmd, *decoding, options)?),
    })
}

/// Produces CCRs for one spec, consulting a cache first when configured.
pub struct QueryGenerator {
    spec: SummarizerSpec,
    fingerprint: String,
    backend: Box<dyn Summarizer>,
    cache: Option<CcrCache>,
}

impl QueryGenerator {
    pub fn new(spec: SummarizerSpec, options: ExternalOptions) -> Result<Self, SummarizeError> {
        let backend = backend(&spec, options)?;
        Ok(Self::with_backend(spec, backend))
    }

    /// Uses a caller-supplied backend, e.g. a test double, under `spec`'s
    /// fingerprint.
    pub fn with_backend(spec: SummarizerSpec, backend: Box<dyn Summarizer>) -> Self {
        Self {
            fingerprint: spec.fingerprint(),
            spec,
            backend,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: CcrCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn spec(&self) -> &SummarizerSpec {
        &self.spec
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn cache(&self) -> Option<&CcrCache> {
        self.cache.as_ref()
    }

    pub fn generate(&self, text: &str) -> Result<Ccr, SummarizeError> {
        let id = smc_id(text);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&id, &self.fingerprint)) {
            return Ok(Ccr {
                text: hit,
                source_smc_id: id,
                spec_fingerprint: self.fingerprint.clone(),
            });
        }
        let summary = self.backend.summarize(text)?;
        if let SummarizerSpec::External { decoding, .. } = &self.spec {
            check_summary(&summary, text, decoding.max_tokens)?;
        }
        if let Some(cache) = &self.cache {
            cache.put(&id, &self.fingerprint, &summary)?;
        }
        Ok(Ccr {
            text: summary,
            source_smc_id: id,
            spec_fingerprint: self.fingerprint.clone(),
        })
    }
}

/// Rejects empty or runaway generations.
pub(crate) fn check_summary(summary: &str, source: &str, max_tokens: u32) -> Result<(), SummarizeError> {
    let words = summary.split_whitespace().count();
    if words == 0 && !source.trim().is_empty() {
        return Err(SummarizeError::Backend {
            message: "empty summary".into(),
            retryable: false,
            attempts: 1,
        });
    }
    let limit = 4 * max_tokens as usize;
    if words > limit {
        return Err(SummarizeError::Backend {
            message: format!("summary has {words} words, more than {limit} (4 x max_tokens)"),
            retryable: false,
            attempts: 1,
        });
    }
    Ok(())
}

/// One-shot summarization without caching.
pub fn summarize(smc_text: &str, spec: &SummarizerSpec) -> Result<Ccr, SummarizeError> {
    QueryGenerator::new(spec.clone(), ExternalOptions::default())?.generate(smc_text)
}
