//! Client for a ClaimReview search API in the shape of Google's Fact Check
//! Tools `claims:search` endpoint.

use std::collections::HashSet;
use std::fmt;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::Deserialize;
use url::Url;

use super::{check_request, normalize_url, RankedResult, RetrieveError, Retriever};

pub const DEFAULT_BASE_URL: &str = "https://factchecktools.googleapis.com";
/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "FACTCHECK_API_KEY";

#[derive(Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub language: Option<String>,
    pub publisher_site: Option<String>,
    pub page_size: u32,
    pub timeout: Duration,
    pub attempts: u32,
    pub backoff: Duration,
    /// Minimum spacing between requests, shared by all callers.
    pub min_interval: Duration,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_owned(),
            api_key: None,
            language: None,
            publisher_site: None,
            page_size: 20,
            timeout: Duration::from_secs(10),
            attempts: 3,
            backoff: Duration::from_millis(500),
            min_interval: Duration::ZERO,
        }
    }
}

impl RemoteConfig {
    /// Default config with the key taken from [`API_KEY_ENV`].
    pub fn from_env() -> Self {
        Self {
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RetrieveError> {
        if !(1..=50).contains(&self.page_size) {
            return Err(RetrieveError::InvalidConfig(format!(
                "page_size must be between 1 and 50, got {}",
                self.page_size
            )));
        }
        Url::parse(&self.base_url)
            .map_err(|e| RetrieveError::InvalidConfig(format!("base URL '{}': {e}", self.base_url)))?;
        Ok(())
    }
}

impl fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("language", &self.language)
            .field("publisher_site", &self.publisher_site)
            .field("page_size", &self.page_size)
            .field("timeout", &self.timeout)
            .field("attempts", &self.attempts)
            .field("min_interval", &self.min_interval)
            .finish()
    }
}

/// Spaces requests at least `interval` apart across threads, and lets a
/// server-advised delay push the next slot further out.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self {
            interval,
            next: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    pub fn defer(&self, delay: Duration) {
        let mut next = self.next.lock().expect("rate limiter lock");
        let candidate = Instant::now() + delay;
        *next = Some(next.map_or(candidate, |n| n.max(candidate)));
    }
}

#[derive(Debug, Deserialize)]
struct SearchResponse {
    #[serde(default)]
    claims: Vec<Claim>,
}

#[derive(Debug, Deserialize)]
struct Claim {
    #[serde(default, rename = "claimReview")]
    claim_review: Vec<ClaimReview>,
}

#[derive(Debug, Deserialize)]
struct ClaimReview {
    url: Option<String>,
    publisher: Option<Publisher>,
    #[serde(rename = "textualRating")]
    textual_rating: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Publisher {
    name: Option<String>,
    site: Option<String>,
}

enum Attempt {
    Done(Vec<RankedResult>),
    Retry(RetrieveError, Option<Duration>),
}

pub struct RemoteClient {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Result<Self, RetrieveError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| RetrieveError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            limiter: RateLimiter::new(config.min_interval),
            config,
            client,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Request URL for `query`, including the key when configured.
    pub fn request_url(&self, query: &str) -> Url {
        let base = format!("{}/v1alpha1/claims:search", self.config.base_url.trim_end_matches('/'));
        let mut url = Url::parse(&base).expect("base URL validated");
        {
            let mut pairs = url.query_pairs_mut();
            pairs.append_pair("query", query);
            pairs.append_pair("pageSize", &self.config.page_size.to_string());
            if let Some(lang) = &self.config.language {
                pairs.append_pair("languageCode", lang);
            }
            if let Some(site) = &self.config.publisher_site {
                pairs.append_pair("reviewPublisherSiteFilter", site);
            }
            if let Some(key) = &self.config.api_key {
                pairs.append_pair("key", key);
            }
        }
        url
    }

    fn attempt(&self, query: &str, limit: usize) -> Result<Attempt, RetrieveError> {
        self.limiter.acquire();
        let response = match self.client.get(self.request_url(query)).send() {
            Ok(r) => r,
            // The error text embeds the URL, and with it the key.
            Err(e) => {
                let kind = if e.is_timeout() { "timed out" } else { "connection failed" };
                return Ok(Attempt::Retry(
                    RetrieveError::Transport {
                        message: format!("request {kind}"),
                        attempts: 0,
                    },
                    None,
                ));
            }
        };
        let status = response.status();
        if status.as_u16() == 429 {
            let advised = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Ok(Attempt::Retry(
                RetrieveError::Throttled {
                    retry_after: advised,
                    attempts: 0,
                },
                advised,
            ));
        }
        let body = response.text().map_err(|_| RetrieveError::Transport {
            message: "reading response body failed".into(),
            attempts: 1,
        });
        let body = match body {
            Ok(b) => b,
            Err(e) => return Ok(Attempt::Retry(e, None)),
        };
        if status.is_server_error() {
            return Ok(Attempt::Retry(
                RetrieveError::Transport {
                    message: format!("HTTP {status}"),
                    attempts: 0,
                },
                None,
            ));
        }
        if !status.is_success() {
            return Err(RetrieveError::Api {
                status: status.as_u16(),
                message: body.chars().take(300).collect(),
            });
        }
        let parsed: SearchResponse = serde_json::from_str(&body).map_err(|e| RetrieveError::Api {
            status: status.as_u16(),
            message: format!("malformed response: {e}"),
        })?;
        Ok(Attempt::Done(flatten(parsed, limit)))
    }
}

/// Flattens claim reviews in API order, normalizing URLs. Reviews without
/// a usable URL are skipped; a repeated URL keeps its first position.
fn flatten(response: SearchResponse, limit: usize) -> Vec<RankedResult> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for review in response.claims.into_iter().flat_map(|c| c.claim_review) {
        let Some(raw) = review.url else { continue };
        let url = match normalize_url(&raw) {
            Ok(u) => u,
            Err(e) => {
                warn!("skipping claim review: {e}");
                continue;
            }
        };
        if !seen.insert(url.clone()) {
            continue;
        }
        let publisher = review.publisher.and_then(|p| p.name.or(p.site));
        out.push(RankedResult {
            url,
            rank: out.len() + 1,
            score: None,
            publisher,
            rating: review.textual_rating,
        });
        if out.len() == limit {
            break;
        }
    }
    out
}

fn with_attempts(err: RetrieveError, attempts: u32) -> RetrieveError {
    match err {
        RetrieveError::Transport { message, .. } => RetrieveError::Transport { message, attempts },
        RetrieveError::Throttled { retry_after, .. } => RetrieveError::Throttled { retry_after, attempts },
        other => other,
    }
}

impl Retriever for RemoteClient {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<RankedResult>, RetrieveError> {
        check_request(query, limit)?;
        let attempts = self.config.attempts.max(1);
        let mut delay = self.config.backoff;
        for attempt in 1..=attempts {
            match self.attempt(query, limit)? {
                Attempt::Done(results) => {
                    debug!("search returned {} result(s)", results.len());
                    return Ok(results);
                }
                Attempt::Retry(err, advised) => {
                    let err = with_attempts(err, attempt);
                    if attempt == attempts {
                        return Err(err);
                    }
                    let wait = advised.unwrap_or(delay);
                    warn!("search attempt {attempt}/{attempts} failed: {err}; retrying in {wait:?}");
                    if advised.is_some() {
                        self.limiter.defer(wait);
                    } else {
                        thread::sleep(wait);
                    }
                    delay *= 2;
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }
}
