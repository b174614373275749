//! Resolution of run settings from flags, a TOML config file, the
//! environment and built-in defaults, in that order of precedence.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, ValueEnum};
use claimcheck::pipeline::{QueryField, DEFAULT_LIMIT, DEFAULT_WORKERS};
use claimcheck::retrieve::{Ranking, RemoteConfig, DEFAULT_BASE_URL};
use claimcheck::summarize::{DecodingConfig, DecodingStrategy, Endpoint, ExternalOptions, SummarizerSpec};
use claimcheck::Strategy;
use serde::Deserialize;

use crate::CliError;

pub const ENV_PREFIX: &str = "CLAIMCHECK_";
pub const DEFAULT_CACHE_DIR: &str = ".claimcheck-cache";
pub const DEFAULT_TOP_K: u32 = 50;
pub const DEFAULT_TOP_P: f64 = 0.92;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodingName {
    Greedy,
    Beam,
    TopK,
    TopP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingName {
    Bm25,
    Tfidf,
}

/// Options shared by `check` and `eval`. Every field is optional so that
/// unset flags fall through to the config file and environment.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Preprocessing strategy: NP, P, P+ERep, P-H, P-M, P-H-M, P-MRR-HRR, P-MRR-HRR+MRep
    #[arg(long)]
    pub strategy: Option<String>,
    /// Query generator: truncate:K, http:URL or cmd:COMMAND
    #[arg(long)]
    pub summarizer: Option<String>,
    /// Decoding strategy sent to an external summarizer
    #[arg(long, value_enum)]
    pub decoding: Option<DecodingName>,
    #[arg(long)]
    pub beam_width: Option<u32>,
    /// Disallow repeated n-grams of this order; 0 disables
    #[arg(long)]
    pub no_repeat_ngram: Option<u32>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub top_k: Option<u32>,
    #[arg(long)]
    pub top_p: Option<f64>,
    /// Summarizer request timeout in seconds
    #[arg(long)]
    pub summarizer_timeout: Option<u64>,
    /// Retriever: api, index:PATH (FCA corpus JSONL) or self (eval only)
    #[arg(long)]
    pub retriever: Option<String>,
    /// Base URL of the fact-check search API
    #[arg(long)]
    pub api_base: Option<String>,
    /// Minimum delay between API requests, in milliseconds
    #[arg(long)]
    pub api_interval_ms: Option<u64>,
    /// Local ranking function
    #[arg(long, value_enum)]
    pub ranking: Option<RankingName>,
    /// Number of results requested per query
    #[arg(long)]
    pub limit: Option<usize>,
    /// TSV file mapping handles to display names
    #[arg(long)]
    pub handle_map: Option<PathBuf>,
    /// Directory holding the CCR cache
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Do not read or write the CCR cache
    #[arg(long)]
    #[serde(default)]
    pub no_cache: bool,
    /// Output format
    #[arg(long, value_enum)]
    pub report: Option<ReportFormat>,
}

/// Config file contents: run options plus eval-only keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub run: RunOptions,
    pub k_list: Option<Vec<usize>>,
    pub query_field: Option<String>,
    pub skip_errors: Option<bool>,
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RetrieverChoice {
    Api,
    Index(PathBuf),
    SelfIndex,
}

impl FromStr for RetrieverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "api" => Ok(Self::Api),
            "self" => Ok(Self::SelfIndex),
            other => match other.strip_prefix("index:") {
                Some(path) if !path.is_empty() => Ok(Self::Index(PathBuf::from(path))),
                _ => Err(format!("unknown retriever '{other}' (expected api, index:PATH or self)")),
            },
        }
    }
}

pub enum SummarizerChoice {
    Truncate(usize),
    External(Endpoint),
}

impl FromStr for SummarizerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "truncate" {
            return Ok(Self::Truncate(claimcheck::summarize::DEFAULT_TRUNCATE_K));
        }
        if let Some(k) = s.strip_prefix("truncate:") {
            return k
                .parse()
                .map(Self::Truncate)
                .map_err(|_| format!("truncate needs a positive integer, got '{k}'"));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(Self::External(Endpoint::Http(s.to_owned())));
        }
        if let Some(url) = s.strip_prefix("http:") {
            let url = if url.starts_with("//") { format!("http:{url}") } else { url.to_owned() };
            return Ok(Self::External(Endpoint::Http(url)));
        }
        if let Some(cmd) = s.strip_prefix("cmd:") {
            return Ok(Self::External(Endpoint::Command(cmd.to_owned())));
        }
        Err(format!("unknown summarizer '{s}' (expected truncate:K, http:URL or cmd:COMMAND)"))
    }
}

/// Looks up `CLAIMCHECK_<NAME>`.
fn env(name: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}{name}"))
        .ok()
        .filter(|v| !v.trim().is_empty())
}

fn parse_env<T: FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match env(name) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{ENV_PREFIX}{name}: cannot parse '{v}'"))),
    }
}

/// Fully resolved settings for one run.
pub struct Settings {
    pub strategy: Strategy,
    pub summarizer: SummarizerSpec,
    pub external: ExternalOptions,
    pub retriever: RetrieverChoice,
    pub remote: RemoteConfig,
    pub ranking: Ranking,
    pub limit: usize,
    pub handle_map: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub report: ReportFormat,
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

impl Settings {
    pub fn resolve(flags: &RunOptions, config: &RunOptions) -> Result<Self, CliError> {
        macro_rules! pick {
            ($field:ident, $env:literal) => {
                match flags.$field.clone().or_else(|| config.$field.clone()) {
                    Some(v) => Some(v),
                    None => parse_env($env)?,
                }
            };
        }

        let strategy = match pick!(strategy, "STRATEGY") {
            Some(s) => s.parse::<Strategy>().map_err(usage)?,
            None => Strategy::NP,
        };

        let decoding_name: Option<String> = match flags.decoding.or(config.decoding) {
            Some(d) => Some(format!("{d:?}")),
            None => env("DECODING"),
        };
        let base = DecodingConfig::default();
        let beam_width: Option<u32> = pick!(beam_width, "BEAM_WIDTH");
        let top_k: Option<u32> = pick!(top_k, "TOP_K");
        let top_p: Option<f64> = pick!(top_p, "TOP_P");
        let strategy_kind = match decoding_name.as_deref().map(|s| s.to_ascii_lowercase().replace(['-', '_'], "")) {
            None => base.strategy,
            Some(n) => match n.as_str() {
                "greedy" => DecodingStrategy::Greedy,
                "beam" => DecodingStrategy::Beam { beam_width: 6 },
                "topk" => DecodingStrategy::TopK { top_k: DEFAULT_TOP_K },
                "topp" => DecodingStrategy::TopP { top_p: DEFAULT_TOP_P },
                other => return Err(CliError::Usage(format!("unknown decoding '{other}'"))),
            },
        };
        let strategy_kind = match strategy_kind {
            DecodingStrategy::Beam { beam_width: w } => DecodingStrategy::Beam {
                beam_width: beam_width.unwrap_or(w),
            },
            DecodingStrategy::TopK { top_k: k } => DecodingStrategy::TopK { top_k: top_k.unwrap_or(k) },
            DecodingStrategy::TopP { top_p: p } => DecodingStrategy::TopP { top_p: top_p.unwrap_or(p) },
            DecodingStrategy::Greedy => DecodingStrategy::Greedy,
        };
        let no_repeat: Option<u32> = pick!(no_repeat_ngram, "NO_REPEAT_NGRAM");
        let decoding = DecodingConfig {
            strategy: strategy_kind,
            no_repeat_ngram: match no_repeat {
                Some(0) => None,
                Some(n) => Some(n),
                None => base.no_repeat_ngram,
            },
            max_tokens: pick!(max_tokens, "MAX_TOKENS").unwrap_or(base.max_tokens),
            early_stopping: base.early_stopping,
        };

        let summarizer = match pick!(summarizer, "SUMMARIZER") {
            None => SummarizerSpec::default(),
            Some(s) => match s.parse::<SummarizerChoice>().map_err(usage)? {
                SummarizerChoice::Truncate(k) => SummarizerSpec::TruncateK { k },
                SummarizerChoice::External(endpoint) => SummarizerSpec::External { endpoint, decoding },
            },
        };
        summarizer.validate().map_err(usage)?;

        let mut external = ExternalOptions::default();
        if let Some(secs) = pick!(summarizer_timeout, "SUMMARIZER_TIMEOUT") {
            external.timeout = Duration::from_secs(secs);
        }

        let retriever = match pick!(retriever, "RETRIEVER") {
            Some(r) => r.parse::<RetrieverChoice>().map_err(usage)?,
            None => RetrieverChoice::Api,
        };

        let mut remote = RemoteConfig::from_env();
        remote.base_url = match flags.api_base.clone().or_else(|| config.api_base.clone()) {
            Some(b) => b,
            None => env("API_BASE").unwrap_or_else(|| DEFAULT_BASE_URL.to_owned()),
        };
        if let Some(ms) = pick!(api_interval_ms, "API_INTERVAL_MS") {
            remote.min_interval = Duration::from_millis(ms);
        }

        let ranking = match flags.ranking.or(config.ranking) {
            Some(RankingName::Tfidf) => Ranking::Tfidf,
            Some(RankingName::Bm25) => Ranking::default(),
            None => match env("RANKING").as_deref() {
                Some("tfidf") => Ranking::Tfidf,
                Some("bm25") | None => Ranking::default(),
                Some(other) => return Err(CliError::Usage(format!("unknown ranking '{other}'"))),
            },
        };

        let limit = pick!(limit, "LIMIT").unwrap_or(DEFAULT_LIMIT);
        let handle_map = pick!(handle_map, "HANDLE_MAP");
        let no_cache = flags.no_cache || config.no_cache || env("NO_CACHE").is_some_and(|v| v == "1" || v == "true");
        let cache_dir = if no_cache {
            None
        } else {
            Some(pick!(cache_dir, "CACHE_DIR").unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)))
        };
        let report = match flags.report.or(config.report) {
            Some(r) => r,
            None => match env("REPORT") {
                Some(r) => ReportFormat::from_str(&r, true).map_err(usage)?,
                None => ReportFormat::Table,
            },
        };

        Ok(Self {
            strategy,
            summarizer,
            external,
            retriever,
            remote,
            ranking,
            limit,
            handle_map,
            cache_dir,
            report,
        })
    }
}

/// Eval-only settings with the same precedence.
pub struct EvalSettings {
    pub k_list: Vec<usize>,
    pub query_field: QueryField,
    pub skip_errors: bool,
    pub workers: usize,
}

pub fn parse_k_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|k| {
            k.trim()
                .parse::<usize>()
                .ok()
                .filter(|k| *k > 0)
                .ok_or_else(|| CliError::Usage(format!("invalid k '{k}' in k-list")))
        })
        .collect()
}

impl EvalSettings {
    pub fn resolve(
        k_list: Option<&str>,
        query_field: Option<&str>,
        skip_errors: bool,
        workers: Option<usize>,
        config: &ConfigFile,
    ) -> Result<Self, CliError> {
        let k_list = match k_list {
            Some(s) => parse_k_list(s)?,
            None => match &config.k_list {
                Some(list) => list.clone(),
                None => match env("K_LIST") {
                    Some(s) => parse_k_list(&s)?,
                    None => vec![1, 5, 10],
                },
            },
        };
        if k_list.is_empty() || k_list.contains(&0) {
            return Err(CliError::Usage("k-list values must be positive".into()));
        }
        let query_field = match query_field.map(str::to_owned).or_else(|| config.query_field.clone()).or_else(|| env("QUERY_FIELD")) {
            Some(q) => q.parse().map_err(CliError::Usage)?,
            None => QueryField::Ccr,
        };
        let skip_errors = skip_errors
            || config.skip_errors.unwrap_or(false)
            || env("SKIP_ERRORS").is_some_and(|v| v == "1" || v == "true");
        let workers = match workers.or(config.workers) {
            Some(w) => w,
            None => parse_env("WORKERS")?.unwrap_or(DEFAULT_WORKERS),
        };
        Ok(Self {
            k_list,
            query_field,
            skip_errors,
            workers,
        })
    }
}
