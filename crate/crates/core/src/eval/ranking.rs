use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Where (if anywhere) a query's gold article was retrieved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub gold_rank: Option<usize>,
}

impl QueryOutcome {
    pub fn new(query_id: impl Into<String>, gold_rank: Option<usize>) -> Self {
        Self {
            query_id: query_id.into(),
            gold_rank,
        }
    }
}

fn checked(outcomes: &[QueryOutcome]) -> Result<Vec<&QueryOutcome>, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::NoOutcomes);
    }
    if let Some(bad) = outcomes.iter().find(|o| o.gold_rank == Some(0)) {
        return Err(EvalError::InvalidRank(bad.query_id.clone()));
    }
    // Fixed summation order regardless of how outcomes were collected.
    let mut sorted: Vec<&QueryOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(sorted)
}

/// Percentage of queries whose gold article is within the top `k`.
pub fn recall_at_k(outcomes: &[QueryOutcome], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let sorted = checked(outcomes)?;
    let hits = sorted
        .iter()
        .filter(|o| o.gold_rank.is_some_and(|r| r <= k))
        .count();
    Ok(100.0 * hits as f64 / sorted.len() as f64)
}

/// Mean reciprocal rank; a missing gold contributes 0.
pub fn mrr(outcomes: &[QueryOutcome]) -> Result<f64, EvalError> {
    let sorted = checked(outcomes)?;
    let total = sorted
        .iter()
        .fold(0.0, |acc, o| acc + o.gold_rank.map_or(0.0, |r| 1.0 / r as f64));
    Ok(total / sorted.len() as f64)
}

/// Recall@k for every k in `1..=k_max`.
pub fn recall_curve(outcomes: &[QueryOutcome], k_max: usize) -> Result<BTreeMap<usize, f64>, EvalError> {
    if k_max == 0 {
        return Err(EvalError::InvalidK);
    }
    let sorted = checked(outcomes)?;
    let n = sorted.len() as f64;
    // hits_at[r] = queries with gold exactly at rank r (r <= k_max).
    let mut hits_at = vec![0usize; k_max + 1];
    for rank in sorted.iter().filter_map(|o| o.gold_rank) {
        if rank <= k_max {
            hits_at[rank] += 1;
        }
    }
    let mut curve = BTreeMap::new();
    let mut cumulative = 0;
    for (k, hits) in hits_at.iter().enumerate().skip(1) {
        cumulative += hits;
        curve.insert(k, 100.0 * cumulative as f64 / n);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recall_at: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_queries: usize,
    pub per_query: Vec<QueryOutcome>,
}

impl MetricsReport {
    pub fn compute(outcomes: Vec<QueryOutcome>, k_list: &[usize]) -> Result<Self, EvalError> {
        let mut recall_at = BTreeMap::new();
        for &k in k_list {
            recall_at.insert(k, recall_at_k(&outcomes, k)?);
        }
        Ok(Self {
            mrr: mrr(&outcomes)?,
            n_queries: outcomes.len(),
            recall_at,
            per_query: outcomes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
