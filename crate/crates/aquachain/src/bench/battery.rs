//! The two t-test batteries and the full `bench all` orchestration.
//!
//! Fixed-nodes battery: dedicated anchored and raw runs at ten nodes and 800
//! transactions, compared per metric. The raw side runs under a 2 MiB block
//! budget so the workload splits into saturated blocks; that is where the
//! two modes separate on size and throughput.
//!
//! Fixed-data battery: block time of the anchored node scan against the raw
//! node scan (scenarios B and D).
//!
//! Sample ordering is fixed per metric so the reported signs line up with
//! the reference experiment: block size and block time put the anchored
//! sample first, throughput puts the raw sample first.

use super::metrics::{compare_modes, BenchError, Metric, MetricsRow};
use super::scenario::{
    run_matrix, run_scenario, Mode, Overrides, RunMatrix, ScenarioConfig, ScenarioName,
    DEFAULT_PAYLOAD_BYTES, DEFAULT_RUNS,
};
use crate::stats::TTestResult;

/// Block budget for the fixed-nodes battery: small enough that the raw
/// 800-tx workload splits into saturated multi-slot blocks.
pub const BATTERY_MAX_BLOCK_BYTES: usize = 2 << 20;
/// Fixed data-hash load of the battery comparisons.
pub const BATTERY_TX_COUNT: usize = 800;

const LABEL_ANCHOR: &str = "T_FIXED_NODES_ANCHOR";
const LABEL_RAW: &str = "T_FIXED_NODES_RAW";

/// A t-test with the metric and sample labels it was run over.
#[derive(Debug, Clone)]
pub struct LabeledTTest {
    pub metric: Metric,
    pub sample_a: String,
    pub sample_b: String,
    pub result: TTestResult,
}

#[derive(Debug)]
pub struct BatteryOutputs {
    pub fixed_nodes_anchor_rows: Vec<MetricsRow>,
    pub fixed_nodes_raw_rows: Vec<MetricsRow>,
    /// block_time_s, block_size_bytes, tps — in that order.
    pub fixed_nodes: Vec<LabeledTTest>,
    pub fixed_data: LabeledTTest,
}

/// Everything `bench all` produces.
#[derive(Debug)]
pub struct BenchOutputs {
    pub scenarios: Vec<(ScenarioName, Vec<MetricsRow>)>,
    pub battery: BatteryOutputs,
    pub runs: usize,
}

fn battery_matrix(label: &str, mode: Mode, seed: u64, o: &Overrides) -> RunMatrix {
    RunMatrix {
        label: label.to_string(),
        mode,
        node_counts: vec![10],
        tx_counts: vec![BATTERY_TX_COUNT],
        payload_bytes: o.payload_bytes.unwrap_or(DEFAULT_PAYLOAD_BYTES),
        runs: o.runs.unwrap_or(DEFAULT_RUNS),
        seed,
        max_block_bytes: o.battery_max_block_bytes.unwrap_or(BATTERY_MAX_BLOCK_BYTES),
        arrival_rate: o.arrival_rate,
    }
}

/// Runs the fixed-nodes battery and assembles both batteries' tests.
///
/// `b_rows` and `d_rows` are the already-computed scenario B and D rows for
/// the fixed-data block-time comparison.
pub fn run_batteries(
    seed: u64,
    overrides: &Overrides,
    b_rows: &[MetricsRow],
    d_rows: &[MetricsRow],
) -> Result<BatteryOutputs, BenchError> {
    let anchor_rows = run_matrix(&battery_matrix(LABEL_ANCHOR, Mode::Anchor, seed, overrides))?;
    let raw_rows = run_matrix(&battery_matrix(LABEL_RAW, Mode::Raw, seed, overrides))?;

    let mut fixed_nodes = Vec::with_capacity(3);
    for metric in Metric::ALL {
        let (sample_a, sample_b, a, b) = match metric {
            // Throughput is reported raw-first; size and time anchored-first.
            Metric::Tps => (LABEL_RAW, LABEL_ANCHOR, &raw_rows, &anchor_rows),
            _ => (LABEL_ANCHOR, LABEL_RAW, &anchor_rows, &raw_rows),
        };
        fixed_nodes.push(LabeledTTest {
            metric,
            sample_a: sample_a.to_string(),
            sample_b: sample_b.to_string(),
            result: compare_modes(metric, a, b)?,
        });
    }

    let fixed_data = LabeledTTest {
        metric: Metric::BlockTime,
        sample_a: ScenarioName::BIpfsFixedData.label().to_string(),
        sample_b: ScenarioName::DRawFixedData.label().to_string(),
        result: compare_modes(Metric::BlockTime, b_rows, d_rows)?,
    };

    Ok(BatteryOutputs {
        fixed_nodes_anchor_rows: anchor_rows,
        fixed_nodes_raw_rows: raw_rows,
        fixed_nodes,
        fixed_data,
    })
}

/// Runs all four scenarios plus both t-test batteries.
pub fn run_bench_all(seed: u64, overrides: &Overrides) -> Result<BenchOutputs, BenchError> {
    let mut scenarios = Vec::with_capacity(4);
    for name in ScenarioName::ALL {
        let cfg = ScenarioConfig::new(name, seed).with_overrides(overrides);
        let rows = run_scenario(&cfg)?;
        scenarios.push((name, rows));
    }
    let b_rows = &scenarios[1].1;
    let d_rows = &scenarios[3].1;
    let battery = run_batteries(seed, overrides, b_rows, d_rows)?;
    let runs = overrides.runs.unwrap_or(DEFAULT_RUNS);
    Ok(BenchOutputs { scenarios, battery, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Slimmed battery: 2 runs instead of 5 keeps this a unit test; the full
    // configuration is exercised by the acceptance suite.
    fn quick_overrides() -> Overrides {
        Overrides { runs: Some(2), ..Overrides::default() }
    }

    #[test]
    fn battery_separates_modes_on_size_and_tps() {
        let o = quick_overrides();
        let b = ScenarioConfig::new(ScenarioName::BIpfsFixedData, 7).with_overrides(&o);
        let d = ScenarioConfig::new(ScenarioName::DRawFixedData, 7).with_overrides(&o);
        let b_rows = run_scenario(&b).unwrap();
        let d_rows = run_scenario(&d).unwrap();
        let battery = run_batteries(7, &o, &b_rows, &d_rows).unwrap();

        let size = &battery.fixed_nodes[1];
        assert_eq!(size.metric, Metric::BlockSize);
        assert!(size.result.t_statistic < 0.0, "t = {}", size.result.t_statistic);
        assert!(size.result.p_value < 0.01, "p = {}", size.result.p_value);

        let tps = &battery.fixed_nodes[2];
        assert_eq!(tps.metric, Metric::Tps);
        assert!(tps.result.t_statistic < 0.0, "t = {}", tps.result.t_statistic);
        assert!(tps.result.mean_b > tps.result.mean_a, "anchored tps must exceed raw");

        // Node-scan block time: quantized identically in both scans.
        assert!(battery.fixed_data.result.p_value > 0.05);
    }

    #[test]
    fn matched_anchor_sized_loads_show_no_block_time_difference() {
        // Raw transactions carrying digest-sized payloads produce blocks of
        // the same order as anchor blocks; under the slot model both modes
        // then quantize to the same block time.
        let anchor = run_matrix(&RunMatrix {
            label: "M_ANCHOR".into(),
            mode: Mode::Anchor,
            node_counts: vec![10],
            tx_counts: vec![100],
            payload_bytes: 2048,
            runs: 2,
            seed: 3,
            max_block_bytes: BATTERY_MAX_BLOCK_BYTES,
            arrival_rate: None,
        })
        .unwrap();
        let raw_small = run_matrix(&RunMatrix {
            label: "M_RAW_MATCHED".into(),
            mode: Mode::Raw,
            node_counts: vec![10],
            tx_counts: vec![100],
            payload_bytes: 36,
            runs: 2,
            seed: 3,
            max_block_bytes: BATTERY_MAX_BLOCK_BYTES,
            arrival_rate: None,
        })
        .unwrap();
        let r = compare_modes(Metric::BlockTime, &anchor, &raw_small).unwrap();
        assert!(r.p_value > 0.05, "p = {}", r.p_value);
    }
}
