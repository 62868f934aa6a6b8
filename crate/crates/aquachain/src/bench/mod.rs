//! Benchmark harness: the four experimental scenarios, per-block metrics
//! capture, t-test batteries comparing anchored against raw storage, and the
//! CSV/JSON/SVG artifact emitters.

mod battery;
mod emit;
mod metrics;
mod scenario;

pub use battery::{
    run_batteries, run_bench_all, BatteryOutputs, BenchOutputs, LabeledTTest,
    BATTERY_MAX_BLOCK_BYTES, BATTERY_TX_COUNT,
};
pub use emit::{
    emit_csv, emit_svg, emit_ttest_json, load_metrics_csv, scenario_series, write_artifacts,
    SvgSeries, CSV_HEADER,
};
pub use metrics::{compare_modes, metrics_from_sim, BenchError, Metric, MetricsRow};
pub use scenario::{
    build_workload, run_matrix, run_scenario, Mode, Overrides, RunMatrix, ScenarioConfig,
    ScenarioName, DEFAULT_MAX_BLOCK_BYTES, DEFAULT_PAYLOAD_BYTES, DEFAULT_RUNS,
};
