//! The four experimental scenarios and the run matrix executing them.
//!
//! Scenario shapes are pinned: A and B anchor payloads off-chain (contents
//! go through the blob store, the chain carries CIDs), C and D embed the
//! full payload on-chain. A and C scan the data-hash count at ten nodes;
//! B and D scan the node count at a fixed load.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use super::metrics::{metrics_from_sim, BenchError, MetricsRow};
use crate::anchor::{make_anchor_tx, make_raw_tx};
use crate::cas::BlobStore;
use crate::chain::Extrinsic;
use crate::ingest::generate_payloads;
use crate::netsim::{run_simulation, verify_chain_invariants, SimConfig, SimError};

/// Block budget for the scenario scans. Large enough that no scan workload
/// is ever split across blocks, so per-run block size tracks the workload
/// size directly.
pub const DEFAULT_MAX_BLOCK_BYTES: usize = 16 << 20;
/// Per-file payload target: a desk-scale stand-in for the full-size batches.
pub const DEFAULT_PAYLOAD_BYTES: usize = 16_384;
/// Repeated simulations per (nodes, tx_count) point.
pub const DEFAULT_RUNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Anchor,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    AIpfsFixedNodes,
    BIpfsFixedData,
    CRawFixedNodes,
    DRawFixedData,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::AIpfsFixedNodes,
        ScenarioName::BIpfsFixedData,
        ScenarioName::CRawFixedNodes,
        ScenarioName::DRawFixedData,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ScenarioName::AIpfsFixedNodes => "A_IPFS_FIXED_NODES",
            ScenarioName::BIpfsFixedData => "B_IPFS_FIXED_DATA",
            ScenarioName::CRawFixedNodes => "C_RAW_FIXED_NODES",
            ScenarioName::DRawFixedData => "D_RAW_FIXED_DATA",
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            ScenarioName::AIpfsFixedNodes | ScenarioName::BIpfsFixedData => Mode::Anchor,
            ScenarioName::CRawFixedNodes | ScenarioName::DRawFixedData => Mode::Raw,
        }
    }

    /// x-axis of this scenario's scan.
    pub fn scans_tx_counts(&self) -> bool {
        matches!(self, ScenarioName::AIpfsFixedNodes | ScenarioName::CRawFixedNodes)
    }

    fn node_counts(&self) -> Vec<usize> {
        if self.scans_tx_counts() {
            vec![10]
        } else {
            (3..=10).collect()
        }
    }

    fn tx_counts(&self) -> Vec<usize> {
        match self {
            ScenarioName::AIpfsFixedNodes => (1..=9).map(|i| i * 10).collect(),
            ScenarioName::BIpfsFixedData => vec![90],
            ScenarioName::CRawFixedNodes => (1..=16).map(|i| i * 50).collect(),
            ScenarioName::DRawFixedData => vec![800],
        }
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<ScenarioName, String> {
        match s {
            "A" | "a" | "A_IPFS_FIXED_NODES" => Ok(ScenarioName::AIpfsFixedNodes),
            "B" | "b" | "B_IPFS_FIXED_DATA" => Ok(ScenarioName::BIpfsFixedData),
            "C" | "c" | "C_RAW_FIXED_NODES" => Ok(ScenarioName::CRawFixedNodes),
            "D" | "d" | "D_RAW_FIXED_DATA" => Ok(ScenarioName::DRawFixedData),
            other => Err(format!("unknown scenario {other:?}; expected A, B, C, or D")),
        }
    }
}

/// Overrides accepted from the JSON config file; command-line flags win
/// over file values.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub runs: Option<usize>,
    pub payload_bytes: Option<usize>,
    pub seed: Option<u64>,
    pub max_block_bytes: Option<usize>,
    pub battery_max_block_bytes: Option<usize>,
    pub arrival_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub mode: Mode,
    pub node_counts: Vec<usize>,
    pub tx_counts: Vec<usize>,
    pub payload_bytes: usize,
    pub runs: usize,
    pub seed: u64,
    pub max_block_bytes: usize,
    /// Open-loop pacing in transactions per second; `None` admits the whole
    /// workload at simulation start (closed-loop saturation).
    pub arrival_rate: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(name: ScenarioName, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            name,
            mode: name.mode(),
            node_counts: name.node_counts(),
            tx_counts: name.tx_counts(),
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            runs: DEFAULT_RUNS,
            seed,
            max_block_bytes: DEFAULT_MAX_BLOCK_BYTES,
            arrival_rate: None,
        }
    }

    pub fn with_overrides(mut self, o: &Overrides) -> ScenarioConfig {
        if let Some(runs) = o.runs {
            self.runs = runs;
        }
        if let Some(p) = o.payload_bytes {
            self.payload_bytes = p;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.max_block_bytes {
            self.max_block_bytes = m;
        }
        self.arrival_rate = o.arrival_rate.or(self.arrival_rate);
        self
    }

    /// The scan shapes are part of the experiment definition and must not
    /// drift: A = anchors 10..90 at ten nodes, B = 90 anchors over 3..10
    /// nodes, C = raw 50..800 at ten nodes, D = 800 raw over 3..10 nodes.
    pub fn validate(&self) -> Result<(), BenchError> {
        let shape_ok = self.mode == self.name.mode()
            && self.node_counts == self.name.node_counts()
            && self.tx_counts == self.name.tx_counts();
        if !shape_ok {
            return Err(BenchError::Config(format!(
                "scenario {} does not match its pinned shape",
                self.name.label()
            )));
        }
        if self.runs == 0 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        if self.payload_bytes == 0 {
            return Err(BenchError::Config("payload_bytes must be positive".into()));
        }
        if let Some(rate) = self.arrival_rate {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(BenchError::Config(format!("arrival_rate must be positive, got {rate}")));
            }
        }
        Ok(())
    }
}

/// A label plus the grid it runs; scenarios and the t-test batteries both
/// reduce to this.
#[derive(Debug, Clone)]
pub struct RunMatrix {
    pub label: String,
    pub mode: Mode,
    pub node_counts: Vec<usize>,
    pub tx_counts: Vec<usize>,
    pub payload_bytes: usize,
    pub runs: usize,
    pub seed: u64,
    pub max_block_bytes: usize,
    pub arrival_rate: Option<f64>,
}

/// Builds the transaction workload for one simulation run.
///
/// Anchor mode stores each generated batch in a fresh blob store, pins the
/// root, and submits a CID-carrying extrinsic; raw mode embeds the batch
/// bytes directly.
pub fn build_workload(
    mode: Mode,
    n_files: usize,
    payload_bytes: usize,
    seed: u64,
    arrival_rate: Option<f64>,
    slot_seconds: u64,
) -> Result<Vec<Extrinsic>, BenchError> {
    let files = generate_payloads(n_files, payload_bytes, seed);
    let mut store = BlobStore::new();
    let mut txs = Vec::with_capacity(files.len());
    for (i, (file_id, payload)) in files.into_iter().enumerate() {
        let submitted_slot = match arrival_rate {
            None => 0,
            Some(rate) => (i as f64 / (rate * slot_seconds as f64)).floor() as u64,
        };
        let tx = match mode {
            Mode::Anchor => {
                let root = store.add_file(&payload)?;
                store.pin(root);
                make_anchor_tx(&file_id, root, submitted_slot)
            }
            Mode::Raw => make_raw_tx(&file_id, payload, submitted_slot)?,
        };
        txs.push(tx);
    }
    Ok(txs)
}

/// Executes every (node_count, tx_count, run) triple of the matrix.
///
/// Triples run on parallel workers; each worker owns one simulation. Rows
/// are merged and sorted afterwards so the output order never depends on
/// scheduling. Per-run seed = base seed + run index.
pub fn run_matrix(matrix: &RunMatrix) -> Result<Vec<MetricsRow>, BenchError> {
    let mut triples = Vec::new();
    for &n_nodes in &matrix.node_counts {
        for &tx_count in &matrix.tx_counts {
            for run in 0..matrix.runs {
                triples.push((n_nodes, tx_count, run));
            }
        }
    }

    let results: Result<Vec<Vec<MetricsRow>>, BenchError> = triples
        .par_iter()
        .map(|&(n_nodes, tx_count, run)| run_triple(matrix, n_nodes, tx_count, run))
        .collect();

    let mut rows: Vec<MetricsRow> = results?.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.scenario, a.run, a.n_nodes, a.tx_target, a.block_number).cmp(&(
            &b.scenario,
            b.run,
            b.n_nodes,
            b.tx_target,
            b.block_number,
        ))
    });
    Ok(rows)
}

fn run_triple(
    matrix: &RunMatrix,
    n_nodes: usize,
    tx_count: usize,
    run: usize,
) -> Result<Vec<MetricsRow>, BenchError> {
    let run_seed = matrix.seed + run as u64;
    let cfg = SimConfig {
        n_nodes,
        max_block_bytes: matrix.max_block_bytes,
        seed: run_seed,
        stop_after_finalized: tx_count as u64,
        ..SimConfig::default()
    };
    let workload = build_workload(
        matrix.mode,
        tx_count,
        matrix.payload_bytes,
        run_seed,
        matrix.arrival_rate,
        cfg.slot_seconds,
    )?;

    let at = |source: SimError| BenchError::Sim {
        scenario: matrix.label.clone(),
        n_nodes,
        tx_target: tx_count,
        run,
        source,
    };
    let result = run_simulation(&cfg, workload).map_err(at)?;
    if let Some(oversize) = result.rejected.first() {
        return Err(BenchError::OversizeTx {
            scenario: matrix.label.clone(),
            n_nodes,
            tx_target: tx_count,
            run,
            id: oversize.meter_file_id.clone(),
            encoded_len: oversize.encoded_len,
            max_block_bytes: oversize.max_block_bytes,
        });
    }

    // Re-check every chain and finality invariant, then replay the chain
    // through the pallet state as a consistency check on every run.
    verify_chain_invariants(&cfg, &result)
        .map_err(|reason| at(SimError::InvariantViolation(reason)))?;
    let mut state = crate::anchor::ChainState::new();
    let mut included = 0usize;
    for block in &result.blocks[1..] {
        state.apply_block(&block.body, block.header.number);
        included += block.body.len();
    }
    if state.record_count() != included || included != tx_count {
        return Err(BenchError::Config(format!(
            "pallet replay mismatch in {}: {} records from {} included of {} submitted",
            matrix.label,
            state.record_count(),
            included,
            tx_count
        )));
    }

    metrics_from_sim(&matrix.label, run, tx_count, &cfg, &result).map_err(at)
}

/// Runs one full scenario after checking its shape.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<MetricsRow>, BenchError> {
    cfg.validate()?;
    run_matrix(&RunMatrix {
        label: cfg.name.label().to_string(),
        mode: cfg.mode,
        node_counts: cfg.node_counts.clone(),
        tx_counts: cfg.tx_counts.clone(),
        payload_bytes: cfg.payload_bytes,
        runs: cfg.runs,
        seed: cfg.seed,
        max_block_bytes: cfg.max_block_bytes,
        arrival_rate: cfg.arrival_rate,
    })
}
