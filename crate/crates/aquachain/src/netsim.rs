//! Deterministic discrete-event simulation of N validator nodes producing,
//! propagating, importing, and finalizing blocks on a slot clock.
//!
//! Time is simulated milliseconds, never wall clock. Authorship is
//! slot-based round-robin: at each slot tick the scheduled author builds a
//! block only if it is idle and caught up with the chain tip. Executing a
//! block costs `exec_base_ms + exec_per_kb_ms * KiB`, and a node that is
//! still executing skips its authoring slots, which quantizes every
//! inter-block production gap to a whole number of slots. Every node votes
//! as it finishes importing; a block finalizes once a quorum of votes is in,
//! never before its parent.
//!
//! Determinism: all randomness (propagation latency) comes from a ChaCha8
//! generator seeded from the config, and simultaneous events are processed
//! in insertion order, so a (config, workload) pair reproduces the same
//! result on any platform.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{
    build_block, genesis, validate_block, Block, Extrinsic, EMPTY_BLOCK_BYTES,
};

/// Quorum threshold as an exact rational so `ceil(q * n)` never suffers
/// float rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quorum {
    pub num: u32,
    pub den: u32,
}

impl Quorum {
    pub const TWO_THIRDS: Quorum = Quorum { num: 2, den: 3 };

    /// Votes required among `n` nodes: `ceil(num * n / den)`.
    pub fn votes_needed(&self, n: usize) -> usize {
        let num = self.num as usize;
        let den = self.den as usize;
        (num * n).div_ceil(den)
    }

    fn is_valid(&self) -> bool {
        // (1/2, 1]: strictly more than half, at most all.
        self.den > 0 && 2 * self.num > self.den && self.num <= self.den
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub slot_seconds: u64,
    pub max_block_bytes: usize,
    pub exec_base_ms: u64,
    pub exec_per_kb_ms: u64,
    pub latency_ms_mean: u64,
    pub latency_ms_jitter: u64,
    pub quorum: Quorum,
    pub seed: u64,
    pub stop_after_finalized: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 10,
            slot_seconds: 6,
            max_block_bytes: 16 << 20,
            exec_base_ms: 500,
            exec_per_kb_ms: 8,
            latency_ms_mean: 50,
            latency_ms_jitter: 20,
            quorum: Quorum::TWO_THIRDS,
            seed: 0,
            stop_after_finalized: 10_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_nodes < 3 {
            return Err(SimError::Config(format!("n_nodes must be >= 3, got {}", self.n_nodes)));
        }
        if self.slot_seconds == 0 {
            return Err(SimError::Config("slot_seconds must be positive".into()));
        }
        if self.max_block_bytes < EMPTY_BLOCK_BYTES {
            return Err(SimError::Config(format!(
                "max_block_bytes {} below empty-block overhead {EMPTY_BLOCK_BYTES}",
                self.max_block_bytes
            )));
        }
        if !self.quorum.is_valid() {
            return Err(SimError::Config(format!(
                "quorum {}/{} outside (1/2, 1]",
                self.quorum.num, self.quorum.den
            )));
        }
        if self.stop_after_finalized == 0 {
            return Err(SimError::Config("stop_after_finalized must be positive".into()));
        }
        Ok(())
    }

    fn exec_cost_ms(&self, block_bytes: usize) -> u64 {
        self.exec_base_ms + (self.exec_per_kb_ms * block_bytes as u64).div_ceil(1024)
    }

    fn slot_ms(&self) -> u64 {
        self.slot_seconds * 1000
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("liveness bound exceeded: {outstanding} blocks unfinalized at {at_ms} ms (bound {bound_ms} ms)")]
    Liveness { at_ms: u64, bound_ms: u64, outstanding: usize },
    #[error("chain invariant violated: {0}")]
    InvariantViolation(String),
    #[error("finality records out of order")]
    NonAdjacentRecords,
}

/// A transaction rejected at pool admission because it can never fit a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OversizeTx {
    pub workload_index: usize,
    pub meter_file_id: String,
    pub encoded_len: usize,
    pub max_block_bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalityRecord {
    pub block_number: u64,
    pub finalized_at_ms: u64,
    pub votes: usize,
}

/// Everything a run produced: the chain (index = height, starting at
/// genesis), one finality record per block, and any rejected transactions.
#[derive(Debug, PartialEq, Eq)]
pub struct SimResult {
    pub blocks: Vec<Block>,
    pub finality: Vec<FinalityRecord>,
    pub rejected: Vec<OversizeTx>,
}

impl SimResult {
    /// Production timestamp of a block in simulated milliseconds.
    pub fn production_ms(&self, height: u64, cfg: &SimConfig) -> u64 {
        self.blocks[height as usize].header.slot * cfg.slot_ms()
    }
}

/// Production-interval block time in seconds between two adjacent finalized
/// blocks. Always a positive multiple of `slot_seconds`.
pub fn block_time_of(
    prev: &FinalityRecord,
    cur: &FinalityRecord,
    blocks: &[Block],
    slot_seconds: u64,
) -> Result<f64, SimError> {
    if cur.block_number != prev.block_number + 1 {
        return Err(SimError::NonAdjacentRecords);
    }
    let prev_slot = blocks[prev.block_number as usize].header.slot;
    let cur_slot = blocks[cur.block_number as usize].header.slot;
    Ok(((cur_slot - prev_slot) * slot_seconds) as f64)
}

/// Checks every chain and finality invariant of a finished run: hash
/// linkage, height and slot ordering, round-robin authorship, Merkle root
/// recomputation, quorum size, and prefix-monotone finalization. Returns a
/// description of the first violation.
pub fn verify_chain_invariants(cfg: &SimConfig, result: &SimResult) -> Result<(), String> {
    if result.blocks.len() != result.finality.len() {
        return Err("finality records do not cover the chain".into());
    }
    for pair in result.blocks.windows(2) {
        validate_block(&pair[0].header, &pair[1], cfg.n_nodes)
            .map_err(|v| format!("block {} fails {v}", pair[1].header.number))?;
    }
    let needed = cfg.quorum.votes_needed(cfg.n_nodes);
    let mut prev_final_ms = 0;
    for (height, rec) in result.finality.iter().enumerate() {
        if rec.block_number != height as u64 {
            return Err(format!("finality record {height} out of order"));
        }
        if height > 0 {
            if rec.votes < needed {
                return Err(format!(
                    "block {height} finalized with {} votes, quorum is {needed}",
                    rec.votes
                ));
            }
            if rec.finalized_at_ms < prev_final_ms {
                return Err(format!("block {height} finalized before its parent"));
            }
            if rec.finalized_at_ms < result.production_ms(height as u64, cfg) {
                return Err(format!("block {height} finalized before production"));
            }
        }
        prev_final_ms = rec.finalized_at_ms;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    SlotTick { slot: u64 },
    BlockArrival { height: u64, node: usize },
    ImportDone { height: u64, node: usize },
    Vote { height: u64, node: usize },
}

struct Event {
    at_ms: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.at_ms == other.at_ms && self.seq == other.seq
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for earliest-first processing.
        (other.at_ms, other.seq).cmp(&(self.at_ms, self.seq))
    }
}

#[derive(Debug, Default)]
struct Node {
    busy_until_ms: u64,
    imported_height: u64,
    pending: BTreeSet<u64>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    events: BinaryHeap<Event>,
    next_seq: u64,
    now_ms: u64,
    nodes: Vec<Node>,
    blocks: Vec<Block>,
    finality: Vec<Option<FinalityRecord>>,
    votes: Vec<usize>,
    quorum_at: Vec<Option<u64>>,
    next_to_finalize: u64,
    pool: VecDeque<Extrinsic>,
    workload: VecDeque<Extrinsic>,
    rejected: Vec<OversizeTx>,
    rejected_count_base: usize,
}

/// Runs one simulation to completion: deterministic in `(cfg, workload)`.
///
/// The run ends when every workload transaction has been included and every
/// built block finalized, or when `stop_after_finalized` blocks have
/// finalized. Exceeding ten nominal slot-times per requested block without
/// finishing is reported as a liveness failure.
pub fn run_simulation(cfg: &SimConfig, workload: Vec<Extrinsic>) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let genesis_block = genesis();
    let n = cfg.n_nodes;
    let mut sim = Sim {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        events: BinaryHeap::new(),
        next_seq: 0,
        now_ms: 0,
        nodes: (0..n).map(|_| Node::default()).collect(),
        blocks: vec![genesis_block],
        finality: vec![Some(FinalityRecord { block_number: 0, finalized_at_ms: 0, votes: n })],
        votes: vec![n],
        quorum_at: vec![Some(0)],
        next_to_finalize: 1,
        pool: VecDeque::new(),
        workload: VecDeque::new(),
        rejected: Vec::new(),
        rejected_count_base: 0,
    };

    // Pool admission: a transaction that cannot fit even an otherwise empty
    // block is rejected up front and reported; the run continues without it.
    for (i, tx) in workload.into_iter().enumerate() {
        if EMPTY_BLOCK_BYTES + 4 + tx.encoded_len() > cfg.max_block_bytes {
            sim.rejected.push(OversizeTx {
                workload_index: i,
                meter_file_id: tx.meter_file_id.clone(),
                encoded_len: tx.encoded_len(),
                max_block_bytes: cfg.max_block_bytes,
            });
        } else {
            sim.workload.push_back(tx);
        }
    }
    sim.rejected_count_base = sim.rejected.len();

    let bound_ms = 10 * cfg.stop_after_finalized * cfg.slot_ms();
    sim.schedule(cfg.slot_ms(), EventKind::SlotTick { slot: 1 });

    while let Some(ev) = sim.events.pop() {
        sim.now_ms = ev.at_ms;
        if sim.now_ms > bound_ms {
            return Err(SimError::Liveness {
                at_ms: sim.now_ms,
                bound_ms,
                outstanding: sim.blocks.len() - sim.finalized_count(),
            });
        }
        match ev.kind {
            EventKind::SlotTick { slot } => sim.on_slot_tick(slot),
            EventKind::BlockArrival { height, node } => sim.on_arrival(height, node),
            EventKind::ImportDone { height, node } => sim.on_import_done(height, node),
            EventKind::Vote { height, node } => sim.on_vote(height, node),
        }
    }

    let finality: Vec<FinalityRecord> = sim
        .finality
        .iter()
        .map(|r| r.expect("loop ended with unfinalized block"))
        .collect();
    Ok(SimResult { blocks: sim.blocks, finality, rejected: sim.rejected })
}

impl Sim<'_> {
    fn schedule(&mut self, at_ms: u64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Event { at_ms, seq, kind });
    }

    fn finalized_count(&self) -> usize {
        self.next_to_finalize as usize
    }

    fn all_work_done(&self) -> bool {
        self.workload.is_empty()
            && self.pool.is_empty()
            && self.next_to_finalize as usize == self.blocks.len()
    }

    fn tip_height(&self) -> u64 {
        (self.blocks.len() - 1) as u64
    }

    fn on_slot_tick(&mut self, slot: u64) {
        // Admit scheduled transactions whose submission slot has arrived.
        while let Some(tx) = self.workload.front() {
            if tx.submitted_slot <= slot {
                let tx = self.workload.pop_front().unwrap();
                self.pool.push_back(tx);
            } else {
                break;
            }
        }

        if self.all_work_done() || self.finalized_count() as u64 > self.cfg.stop_after_finalized {
            return; // no further ticks; the event queue drains and the loop ends
        }

        let author = (slot % self.cfg.n_nodes as u64) as usize;
        let tip = self.tip_height();
        let node = &self.nodes[author];
        let can_author = node.busy_until_ms <= self.now_ms
            && node.imported_height == tip
            && !self.pool.is_empty();
        if can_author {
            let parent = self.blocks[tip as usize].header.clone();
            let block = build_block(
                &parent,
                slot,
                &mut self.pool,
                self.cfg.max_block_bytes,
                self.cfg.n_nodes,
            )
            .expect("slot advances past parent and budget covers empty block");
            debug_assert!(validate_block(&parent, &block, self.cfg.n_nodes).is_ok());
            if !block.body.is_empty() {
                let height = block.header.number;
                let cost = self.cfg.exec_cost_ms(block.encoded_len());
                self.blocks.push(block);
                self.finality.push(None);
                self.votes.push(0);
                self.quorum_at.push(None);
                // The author executes its own block, then acks it.
                self.nodes[author].busy_until_ms = self.now_ms + cost;
                self.schedule(self.now_ms + cost, EventKind::ImportDone { height, node: author });
                // Everyone else hears about it after a propagation delay.
                for peer in 0..self.cfg.n_nodes {
                    if peer != author {
                        let delay = self.draw_latency();
                        self.schedule(
                            self.now_ms + delay,
                            EventKind::BlockArrival { height, node: peer },
                        );
                    }
                }
            }
        }

        self.schedule(self.now_ms + self.cfg.slot_ms(), EventKind::SlotTick { slot: slot + 1 });
    }

    fn draw_latency(&mut self) -> u64 {
        let lo = self.cfg.latency_ms_mean.saturating_sub(self.cfg.latency_ms_jitter);
        let hi = self.cfg.latency_ms_mean + self.cfg.latency_ms_jitter;
        self.rng.random_range(lo..=hi)
    }

    fn on_arrival(&mut self, height: u64, node: usize) {
        self.nodes[node].pending.insert(height);
        self.try_start_import(node);
    }

    fn try_start_import(&mut self, node: usize) {
        let next = self.nodes[node].imported_height + 1;
        if self.nodes[node].busy_until_ms > self.now_ms
            || !self.nodes[node].pending.contains(&next)
        {
            return;
        }
        self.nodes[node].pending.remove(&next);
        let cost = self.cfg.exec_cost_ms(self.blocks[next as usize].encoded_len());
        self.nodes[node].busy_until_ms = self.now_ms + cost;
        self.schedule(self.now_ms + cost, EventKind::ImportDone { height: next, node });
    }

    fn on_import_done(&mut self, height: u64, node: usize) {
        self.nodes[node].imported_height = height;
        // Voting is an implicit import acknowledgment.
        self.schedule(self.now_ms, EventKind::Vote { height, node });
        self.try_start_import(node);
    }

    fn on_vote(&mut self, height: u64, _node: usize) {
        let h = height as usize;
        self.votes[h] += 1;
        let needed = self.cfg.quorum.votes_needed(self.cfg.n_nodes);
        if self.votes[h] >= needed && self.quorum_at[h].is_none() {
            self.quorum_at[h] = Some(self.now_ms);
        }
        // Finalization is prefix-monotone: a block waits for its parent.
        while (self.next_to_finalize as usize) < self.blocks.len() {
            let idx = self.next_to_finalize as usize;
            let Some(quorum_ms) = self.quorum_at[idx] else { break };
            let parent_final = self.finality[idx - 1]
                .expect("prefix rule: parent finalized first")
                .finalized_at_ms;
            self.finality[idx] = Some(FinalityRecord {
                block_number: self.next_to_finalize,
                finalized_at_ms: quorum_ms.max(parent_final),
                votes: self.votes[idx],
            });
            self.next_to_finalize += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::make_raw_tx;

    // Fixed-width ids keep every tx the same encoded size.
    fn tiny_workload(count: usize, payload: usize) -> Vec<Extrinsic> {
        (0..count)
            .map(|i| make_raw_tx(&format!("syn-{i:04}"), vec![i as u8; payload], 0).unwrap())
            .collect()
    }

    // encoded size of one tiny_workload tx including the in-block prefix
    fn tx_cost(payload: usize) -> usize {
        4 + 17 + 8 + payload
    }

    fn block_times(result: &SimResult, cfg: &SimConfig) -> Vec<f64> {
        result
            .finality
            .windows(2)
            .map(|w| block_time_of(&w[0], &w[1], &result.blocks, cfg.slot_seconds).unwrap())
            .collect()
    }

    #[test]
    fn light_load_gaps_are_exactly_one_slot() {
        // 30 tiny txs, 10 per block: no execution overrun anywhere.
        let cfg = SimConfig {
            max_block_bytes: EMPTY_BLOCK_BYTES + 10 * tx_cost(8),
            ..SimConfig::default()
        };
        let result = run_simulation(&cfg, tiny_workload(30, 8)).unwrap();
        assert_eq!(result.blocks.len(), 4); // genesis + 3
        for gap in block_times(&result, &cfg) {
            assert_eq!(gap, 6.0);
        }
    }

    #[test]
    fn saturated_stretch_gaps_are_two_slots() {
        // Hand-traced schedule: a full block is ~1 MiB, so executing it
        // costs 500 + 8*1024 = 8692 ms, between one and two slots. Block k
        // is built at slot s, every node is busy importing it through slot
        // s+1, and the next author builds at slot s+2: every saturated gap
        // is exactly 12 s.
        let payload = 64 * 1024;
        let cfg = SimConfig {
            max_block_bytes: EMPTY_BLOCK_BYTES + 16 * tx_cost(payload),
            ..SimConfig::default()
        };
        let result = run_simulation(&cfg, tiny_workload(48, payload)).unwrap();
        assert_eq!(result.blocks.len(), 4); // genesis + 3 full blocks
        let times = block_times(&result, &cfg);
        // First block follows genesis (no import work): one slot. The
        // saturated stretch after it: two slots each.
        assert_eq!(times[0], 6.0);
        assert_eq!(&times[1..], &[12.0, 12.0]);
    }

    #[test]
    fn determinism_same_seed_same_everything() {
        let cfg = SimConfig { seed: 1234, max_block_bytes: 4096, ..SimConfig::default() };
        let a = run_simulation(&cfg, tiny_workload(40, 100)).unwrap();
        let b = run_simulation(&cfg, tiny_workload(40, 100)).unwrap();
        assert_eq!(a, b);
        let other = SimConfig { seed: 1235, ..cfg };
        let c = run_simulation(&other, tiny_workload(40, 100)).unwrap();
        // Different latency draws shift finalization times.
        assert_ne!(
            a.finality.iter().map(|f| f.finalized_at_ms).collect::<Vec<_>>(),
            c.finality.iter().map(|f| f.finalized_at_ms).collect::<Vec<_>>(),
        );
    }

    #[test]
    fn chain_is_internally_valid() {
        let cfg = SimConfig { max_block_bytes: 2048, ..SimConfig::default() };
        let result = run_simulation(&cfg, tiny_workload(25, 30)).unwrap();
        for pair in result.blocks.windows(2) {
            assert!(validate_block(&pair[0].header, &pair[1], cfg.n_nodes).is_ok());
        }
    }

    #[test]
    fn quorum_and_finalization_order() {
        for n_nodes in 3..=10 {
            let cfg = SimConfig { n_nodes, max_block_bytes: 4096, ..SimConfig::default() };
            let result = run_simulation(&cfg, tiny_workload(20, 64)).unwrap();
            let needed = (2 * n_nodes).div_ceil(3);
            let mut prev_ms = 0;
            for rec in &result.finality[1..] {
                assert!(rec.votes >= needed, "votes {} < {needed}", rec.votes);
                assert!(rec.finalized_at_ms >= prev_ms);
                prev_ms = rec.finalized_at_ms;
            }
        }
    }

    #[test]
    fn slot_quantization_holds() {
        let cfg = SimConfig { max_block_bytes: 100_000, ..SimConfig::default() };
        let result = run_simulation(&cfg, tiny_workload(200, 700)).unwrap();
        for gap in block_times(&result, &cfg) {
            let k = gap / cfg.slot_seconds as f64;
            assert_eq!(k.fract(), 0.0, "gap {gap} not slot-quantized");
            assert!(k >= 1.0);
        }
    }

    #[test]
    fn oversize_tx_is_rejected_and_run_continues() {
        let cfg = SimConfig { max_block_bytes: 1024, ..SimConfig::default() };
        let mut workload = tiny_workload(5, 16);
        workload.insert(2, make_raw_tx("synthetic-big", vec![0u8; 4096], 0).unwrap());
        let result = run_simulation(&cfg, workload).unwrap();
        assert_eq!(result.rejected.len(), 1);
        assert_eq!(result.rejected[0].meter_file_id, "synthetic-big");
        assert_eq!(result.rejected[0].workload_index, 2);
        let included: usize = result.blocks.iter().map(|b| b.body.len()).sum();
        assert_eq!(included, 5);
    }

    #[test]
    fn invalid_configs_are_refused() {
        let bad = SimConfig { n_nodes: 2, ..SimConfig::default() };
        assert!(matches!(run_simulation(&bad, vec![]), Err(SimError::Config(_))));
        let bad = SimConfig { quorum: Quorum { num: 1, den: 2 }, ..SimConfig::default() };
        assert!(matches!(bad.validate(), Err(SimError::Config(_))));
        let bad = SimConfig { slot_seconds: 0, ..SimConfig::default() };
        assert!(matches!(bad.validate(), Err(SimError::Config(_))));
    }

    #[test]
    fn quorum_arithmetic_is_exact() {
        let q = Quorum::TWO_THIRDS;
        for (n, expected) in [(3, 2), (4, 3), (5, 4), (6, 4), (7, 5), (8, 6), (9, 6), (10, 7)] {
            assert_eq!(q.votes_needed(n), expected, "n={n}");
        }
    }

    #[test]
    fn block_time_requires_adjacent_records() {
        let cfg = SimConfig::default();
        let result = run_simulation(&cfg, tiny_workload(12, 8)).unwrap();
        let err = block_time_of(
            &result.finality[0],
            &result.finality[0],
            &result.blocks,
            cfg.slot_seconds,
        );
        assert!(matches!(err, Err(SimError::NonAdjacentRecords)));
    }

    #[test]
    fn empty_workload_finishes_immediately() {
        let result = run_simulation(&SimConfig::default(), vec![]).unwrap();
        assert_eq!(result.blocks.len(), 1); // genesis only
        assert!(result.finality[0].finalized_at_ms == 0);
    }

    #[test]
    fn pathological_exec_cost_trips_the_liveness_bound() {
        // One requested block bounds the run at 60 simulated seconds; an
        // import that takes two minutes cannot finalize in time.
        let cfg = SimConfig {
            exec_base_ms: 120_000,
            stop_after_finalized: 1,
            ..SimConfig::default()
        };
        let err = run_simulation(&cfg, tiny_workload(1, 16)).unwrap_err();
        assert!(matches!(err, SimError::Liveness { .. }), "{err}");
    }

    #[test]
    fn invariant_checker_accepts_real_runs_and_rejects_tampering() {
        let cfg = SimConfig { max_block_bytes: 4096, ..SimConfig::default() };
        let mut result = run_simulation(&cfg, tiny_workload(30, 64)).unwrap();
        verify_chain_invariants(&cfg, &result).unwrap();

        let last = result.finality.len() - 1;
        result.finality[last].votes = 1;
        assert!(verify_chain_invariants(&cfg, &result).unwrap_err().contains("quorum"));
    }
}
