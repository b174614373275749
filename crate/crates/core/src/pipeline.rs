//! End-to-end composition: preprocess, generate a query, retrieve, match.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, DatasetPair};
use crate::eval::{EvalError, MetricsReport, QueryOutcome};
use crate::lexer::{self, LexError};
use crate::preprocess::{self, HandleMap, PreprocessError, Strategy};
use crate::retrieve::{match_gold, RankedResult, RetrieveError, Retriever};
use crate::summarize::{QueryGenerator, SummarizeError};

pub const DEFAULT_LIMIT: usize = 5;
pub const DEFAULT_WORKERS: usize = 4;

/// Which text of a dataset pair becomes the retrieval query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryField {
    /// Preprocessed SMC condensed by the summarizer.
    #[default]
    Ccr,
    /// The gold claim-review summary, verbatim.
    Scr,
    /// The preprocessed SMC, not summarized.
    Smc,
}

impl FromStr for QueryField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ccr" => Ok(Self::Ccr),
            "scr" => Ok(Self::Scr),
            "smc" => Ok(Self::Smc),
            other => Err(format!("unknown query field '{other}' (expected ccr, scr or smc)")),
        }
    }
}

impl fmt::Display for QueryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ccr => "ccr",
            Self::Scr => "scr",
            Self::Smc => "smc",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("query {query_id}: {source}")]
    Query {
        query_id: String,
        source: Box<PipelineError>,
    },
}

/// Coarse failure classes with stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    Transport,
    Other,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Other => 1,
            ErrorClass::Validation => 2,
            ErrorClass::Io => 3,
            ErrorClass::Transport => 4,
        }
    }
}

impl PipelineError {
    pub fn class(&self) -> ErrorClass {
        use ErrorClass::*;
        match self {
            PipelineError::Config(_) | PipelineError::Lex(_) | PipelineError::Eval(_) => Validation,
            PipelineError::Preprocess(PreprocessError::Io(_)) => Io,
            PipelineError::Preprocess(_) => Validation,
            PipelineError::Summarize(SummarizeError::InvalidConfig(_)) => Validation,
            PipelineError::Summarize(SummarizeError::Cache(_)) => Io,
            PipelineError::Summarize(SummarizeError::Backend { .. } | SummarizeError::Timeout(_)) => Transport,
            PipelineError::Retrieve(e) if e.is_transport() => Transport,
            PipelineError::Retrieve(RetrieveError::Io(_)) => Io,
            PipelineError::Retrieve(_) => Validation,
            PipelineError::Dataset(DatasetError::Io { .. }) => Io,
            PipelineError::Dataset(DatasetError::Preprocess(PreprocessError::Io(_))) => Io,
            PipelineError::Dataset(_) => Validation,
            PipelineError::Query { source, .. } => source.class(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub limit: usize,
    pub query_field: QueryField,
    /// Upper bound on concurrent queries during evaluation.
    pub workers: usize,
    /// Exclude failed queries from the report instead of aborting.
    pub skip_errors: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::NP,
            limit: DEFAULT_LIMIT,
            query_field: QueryField::Ccr,
            workers: DEFAULT_WORKERS,
            skip_errors: false,
        }
    }
}

/// Output of checking a single claim.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutput {
    pub processed: String,
    pub query: String,
    pub results: Vec<RankedResult>,
}

/// Per-query trace of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub query: String,
    pub gold_rank: Option<usize>,
    pub retrieved: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryFailure {
    pub query_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRun {
    pub report: MetricsReport,
    pub queries: Vec<QueryRecord>,
    pub failures: Vec<QueryFailure>,
}

pub struct Pipeline {
    config: PipelineConfig,
    handles: Option<HandleMap>,
    generator: QueryGenerator,
    retriever: Box<dyn Retriever>,
}

impl Pipeline {
    pub fn new(
        config: PipelineConfig,
        handles: Option<HandleMap>,
        generator: QueryGenerator,
        retriever: Box<dyn Retriever>,
    ) -> Result<Self, PipelineError> {
        if config.limit == 0 || config.limit > crate::retrieve::MAX_LIMIT {
            return Err(RetrieveError::InvalidLimit(config.limit).into());
        }
        if config.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        if config.strategy.needs_handle_map() && handles.is_none() {
            return Err(PreprocessError::MissingHandleMap(config.strategy).into());
        }
        Ok(Self {
            config,
            handles,
            generator,
            retriever,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn generator(&self) -> &QueryGenerator {
        &self.generator
    }

    fn preprocess(&self, smc: &str) -> Result<String, PipelineError> {
        let stream = lexer::tokenize(smc)?;
        Ok(preprocess::apply(self.config.strategy, &stream, self.handles.as_ref())?)
    }

    /// Preprocesses and summarizes `smc` into the query actually sent.
    pub fn ccr_query(&self, smc: &str) -> Result<(String, String), PipelineError> {
        let processed = self.preprocess(smc)?;
        if processed.trim().is_empty() {
            return Ok((processed, String::new()));
        }
        let ccr = self.generator.generate(&processed)?;
        Ok((processed, ccr.text))
    }

    /// Runs one claim through the workflow.
    pub fn check(&self, claim: &str) -> Result<CheckOutput, PipelineError> {
        if claim.trim().is_empty() {
            return Err(RetrieveError::EmptyQuery.into());
        }
        let (processed, query) = self.ccr_query(claim)?;
        if query.trim().is_empty() {
            return Err(RetrieveError::EmptyQuery.into());
        }
        let results = self.retriever.search(&query, self.config.limit)?;
        Ok(CheckOutput {
            processed,
            query,
            results,
        })
    }

    fn query_for(&self, pair: &DatasetPair) -> Result<String, PipelineError> {
        match self.config.query_field {
            QueryField::Ccr => Ok(self.ccr_query(&pair.smc)?.1),
            QueryField::Smc => self.preprocess(&pair.smc),
            QueryField::Scr => Ok(pair.scr.clone()),
        }
    }

    fn run_one(&self, query_id: String, pair: &DatasetPair, gold: &HashSet<String>) -> Result<QueryRecord, PipelineError> {
        let query = self.query_for(pair)?;
        // A query with no content retrieves nothing.
        let results = if query.trim().is_empty() {
            Vec::new()
        } else {
            self.retriever.search(&query, self.config.limit)?
        };
        Ok(QueryRecord {
            query_id,
            gold_rank: match_gold(&results, gold),
            retrieved: results.into_iter().map(|r| r.url).collect(),
            query,
        })
    }

    /// Evaluates every pair. Each query's gold set is every article URL
    /// paired with the same SMC text. Output order follows input order.
    pub fn evaluate(&self, pairs: &[DatasetPair], k_list: &[usize]) -> Result<EvalRun, PipelineError> {
        if pairs.is_empty() {
            return Err(DatasetError::Empty.into());
        }
        if k_list.is_empty() || k_list.contains(&0) {
            return Err(EvalError::InvalidK.into());
        }
        let mut gold: HashMap<&str, HashSet<String>> = HashMap::new();
        for p in pairs {
            gold.entry(&p.smc).or_default().insert(p.fca_url.clone());
        }
        let width = pairs.len().to_string().len();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
        info!(
            "evaluating {} pairs ({}, {}, query field {}) with {} workers",
            pairs.len(),
            self.config.strategy,
            self.generator.spec(),
            self.config.query_field,
            self.config.workers
        );
        let results: Vec<Result<QueryRecord, PipelineError>> = pool.install(|| {
            pairs
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let id = format!("{i:0width$}");
                    self.run_one(id.clone(), p, &gold[p.smc.as_str()])
                        .map_err(|e| PipelineError::Query {
                            query_id: id,
                            source: Box::new(e),
                        })
                })
                .collect()
        });
        let mut queries = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for result in results {
            match result {
                Ok(record) => queries.push(record),
                Err(e) if self.config.skip_errors => {
                    warn!("{e}; excluded from the report");
                    if let PipelineError::Query { query_id, source } = e {
                        failures.push(QueryFailure {
                            query_id,
                            message: source.to_string(),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        if queries.is_empty() {
            return Err(EvalError::NoOutcomes.into());
        }
        let outcomes = queries
            .iter()
            .map(|q| QueryOutcome::new(q.query_id.clone(), q.gold_rank))
            .collect();
        Ok(EvalRun {
            report: MetricsReport::compute(outcomes, k_list)?,
            queries,
            failures,
        })
    }
}
