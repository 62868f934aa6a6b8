//! Per-finalized-block metrics and the metric-column t-test entry point.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netsim::{block_time_of, SimConfig, SimError, SimResult};
use crate::stats::{welch_t, StatsError, TTestResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("oversize transaction in {scenario} (n_nodes={n_nodes}, tx_target={tx_target}, run={run}): {id} encodes to {encoded_len} bytes, budget {max_block_bytes}")]
    OversizeTx {
        scenario: String,
        n_nodes: usize,
        tx_target: usize,
        run: usize,
        id: String,
        encoded_len: usize,
        max_block_bytes: usize,
    },
    #[error("simulation failed in {scenario} (n_nodes={n_nodes}, tx_target={tx_target}, run={run}): {source}")]
    Sim { scenario: String, n_nodes: usize, tx_target: usize, run: usize, source: SimError },
    #[error("refusing to emit an empty series")]
    EmptySeries,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("anchoring failed: {0}")]
    Cas(#[from] crate::cas::CasError),
    #[error("workload build failed: {0}")]
    Anchor(#[from] crate::anchor::AnchorError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad metrics csv {path}: {reason}")]
    BadCsv { path: String, reason: String },
}

/// One row per finalized block.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub run: usize,
    pub n_nodes: usize,
    pub tx_target: usize,
    pub block_number: u64,
    pub block_time_s: f64,
    pub finality_latency_s: f64,
    pub block_size_bytes: u64,
    pub tx_count: usize,
    pub tps: f64,
}

/// The three compared metric columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    BlockTime,
    BlockSize,
    Tps,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::BlockTime, Metric::BlockSize, Metric::Tps];

    pub fn column(&self) -> &'static str {
        match self {
            Metric::BlockTime => "block_time_s",
            Metric::BlockSize => "block_size_bytes",
            Metric::Tps => "tps",
        }
    }

    pub fn axis_label(&self) -> &'static str {
        match self {
            Metric::BlockTime => "block time (s)",
            Metric::BlockSize => "block size (bytes)",
            Metric::Tps => "throughput (tx/s)",
        }
    }

    pub fn extract(&self, row: &MetricsRow) -> f64 {
        match self {
            Metric::BlockTime => row.block_time_s,
            Metric::BlockSize => row.block_size_bytes as f64,
            Metric::Tps => row.tps,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Metric, String> {
        match s {
            "block_time_s" | "block_time" => Ok(Metric::BlockTime),
            "block_size_bytes" | "block_size" => Ok(Metric::BlockSize),
            "tps" | "throughput" => Ok(Metric::Tps),
            other => Err(format!(
                "unknown metric {other:?}; expected block_time_s, block_size_bytes, or tps"
            )),
        }
    }
}

/// Builds one row per finalized non-genesis block of a simulation.
pub fn metrics_from_sim(
    scenario: &str,
    run: usize,
    tx_target: usize,
    cfg: &SimConfig,
    result: &SimResult,
) -> Result<Vec<MetricsRow>, SimError> {
    let mut rows = Vec::with_capacity(result.blocks.len().saturating_sub(1));
    for k in 1..result.blocks.len() {
        let prev = &result.finality[k - 1];
        let cur = &result.finality[k];
        let block = &result.blocks[k];
        let block_time_s = block_time_of(prev, cur, &result.blocks, cfg.slot_seconds)?;
        let production_ms = result.production_ms(k as u64, cfg);
        let finality_latency_s = (cur.finalized_at_ms - production_ms) as f64 / 1000.0;
        let tx_count = block.body.len();
        rows.push(MetricsRow {
            scenario: scenario.to_string(),
            run,
            n_nodes: cfg.n_nodes,
            tx_target,
            block_number: block.header.number,
            block_time_s,
            finality_latency_s,
            block_size_bytes: block.encoded_len() as u64,
            tx_count,
            tps: tx_count as f64 / block_time_s,
        });
    }
    Ok(rows)
}

/// Extracts one metric column from each row set and runs Welch's test.
pub fn compare_modes(
    metric: Metric,
    a: &[MetricsRow],
    b: &[MetricsRow],
) -> Result<TTestResult, BenchError> {
    let col_a: Vec<f64> = a.iter().map(|r| metric.extract(r)).collect();
    let col_b: Vec<f64> = b.iter().map(|r| metric.extract(r)).collect();
    Ok(welch_t(&col_a, &col_b)?)
}
