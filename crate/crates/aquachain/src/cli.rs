//! The `aquabench` command-line surface.
//!
//! Exit codes: 0 on success, 1 on argument or configuration errors, 2 on
//! runtime failures (simulation, statistics, or I/O).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::bench::{
    emit_csv, emit_svg, emit_ttest_json, load_metrics_csv, run_bench_all, run_scenario,
    write_artifacts, BenchError, Metric, Overrides, ScenarioConfig, ScenarioName,
};
use crate::cas::{cid_of_blob, default_endpoint, remote_add, remote_cat, RemoteError};
use crate::ingest::{generate_synthetic, REFERENCE_CORPUS_BYTES};
use crate::stats::{pooled_t, welch_t};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "aquabench",
    version,
    about = "Proof-of-authority chain simulator benchmarking anchored vs raw meter-data storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Base RNG seed; per-run seed = base + run index
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for emitted artifacts
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// JSON file overriding scenario defaults (runs, payload_bytes, seed,
    /// max_block_bytes, battery_max_block_bytes, arrival_rate)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeat count per scan point
    #[arg(long)]
    runs: Option<usize>,
    /// Target payload bytes per meter file
    #[arg(long)]
    payload_bytes: Option<usize>,
    /// Open-loop admission rate in tx/s (default: whole workload at start)
    #[arg(long)]
    arrival_rate: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic meter CSV batch files
    GenData {
        /// Number of batch files
        #[arg(long, default_value_t = 90)]
        files: usize,
        /// Records per file
        #[arg(long, default_value_t = 1000)]
        records: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "out/data")]
        out_dir: PathBuf,
    },
    /// Run one scenario (A, B, C, or D) and emit its CSV and charts
    Run {
        /// Scenario name: A, B, C, D or the full label
        scenario: String,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Run the full suite: all four scenarios plus both t-test batteries
    Bench {
        /// What to run; only "all" is defined
        what: String,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Welch t-test between one metric column of two metrics CSVs
    Ttest {
        a: PathBuf,
        b: PathBuf,
        /// block_time_s, block_size_bytes, or tps
        #[arg(long)]
        metric: String,
        /// Use the pooled-variance Student test instead of Welch
        #[arg(long)]
        pooled: bool,
    },
    /// Round-trip a probe blob through a Kubo-compatible daemon
    IpfsCheck {
        /// Daemon RPC endpoint; defaults to $AQUA_IPFS_API or localhost:5001
        #[arg(long)]
        endpoint: Option<String>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> CliError {
        match e {
            BenchError::Config(_) | BenchError::EmptySeries | BenchError::BadCsv { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenData { files, records, seed, out_dir } => gen_data(files, records, seed, &out_dir),
        Command::Run { scenario, common } => run_one(&scenario, &common),
        Command::Bench { what, common } => {
            if what != "all" {
                return Err(CliError::Validation(format!(
                    "unknown bench target {what:?}; only \"all\" is defined"
                )));
            }
            bench_all(&common)
        }
        Command::Ttest { a, b, metric, pooled } => {
            let metric: Metric = metric.parse().map_err(CliError::Validation)?;
            ttest(&a, &b, metric, pooled)
        }
        Command::IpfsCheck { endpoint } => ipfs_check(endpoint),
    }
}

fn load_overrides(common: &CommonRunArgs) -> Result<Overrides, CliError> {
    let mut overrides = match &common.config {
        None => Overrides::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Validation(format!("bad config {}: {e}", path.display()))
            })?
        }
    };
    // flags win over file values
    overrides.seed = common.seed.or(overrides.seed);
    overrides.runs = common.runs.or(overrides.runs);
    overrides.payload_bytes = common.payload_bytes.or(overrides.payload_bytes);
    overrides.arrival_rate = common.arrival_rate.or(overrides.arrival_rate);
    Ok(overrides)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn gen_data(files: usize, records: usize, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    if files == 0 || records == 0 {
        return Err(CliError::Validation("files and records must be at least 1".into()));
    }
    ensure_dir(out_dir)?;
    let batches = generate_synthetic(files, records, seed);
    let mut total: u64 = 0;
    for batch in &batches {
        let path = out_dir.join(format!("{}.csv", batch.file_id));
        fs::write(&path, &batch.encoded)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        total += batch.encoded.len() as u64;
    }
    println!(
        "wrote {files} files, {total} bytes total (1/{:.0} of the 56.38 GB reference corpus)",
        REFERENCE_CORPUS_BYTES as f64 / total as f64
    );
    Ok(())
}

fn run_one(scenario: &str, common: &CommonRunArgs) -> Result<(), CliError> {
    let name: ScenarioName = scenario.parse().map_err(CliError::Validation)?;
    let overrides = load_overrides(common)?;
    let seed = overrides.seed.unwrap_or(DEFAULT_SEED);
    let cfg = ScenarioConfig::new(name, seed).with_overrides(&overrides);
    let rows = run_scenario(&cfg)?;
    ensure_dir(&common.out_dir)?;
    let csv_path = common.out_dir.join(format!("scenario_{}.csv", name.label()));
    fs::write(&csv_path, emit_csv(&rows)?)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    let svg_dir = common.out_dir.join("svg");
    ensure_dir(&svg_dir)?;
    for metric in Metric::ALL {
        let series =
            crate::bench::scenario_series(&rows, name.scans_tx_counts(), metric, cfg.runs);
        let x_label = if name.scans_tx_counts() { "data hashes per run" } else { "validator nodes" };
        let svg = emit_svg(
            &format!("{}: {}", name.label(), metric.column()),
            x_label,
            metric.axis_label(),
            &series,
        )?;
        let path = svg_dir.join(format!("{}_{}.svg", name.label(), metric.column()));
        fs::write(&path, svg)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    println!("{}: {} rows -> {}", name.label(), rows.len(), csv_path.display());
    Ok(())
}

fn bench_all(common: &CommonRunArgs) -> Result<(), CliError> {
    let overrides = load_overrides(common)?;
    let seed = overrides.seed.unwrap_or(DEFAULT_SEED);
    let outputs = run_bench_all(seed, &overrides)?;
    ensure_dir(&common.out_dir)?;
    let written = write_artifacts(&outputs, &common.out_dir)?;
    for (name, rows) in &outputs.scenarios {
        println!("{}: {} rows", name.label(), rows.len());
    }
    for test in &outputs.battery.fixed_nodes {
        let r = &test.result;
        println!(
            "fixed-nodes {} ({} vs {}): t = {:.4}, df = {:.2}, p = {:.3e}{}",
            test.metric.column(),
            test.sample_a,
            test.sample_b,
            r.t_statistic,
            r.df,
            r.p_value,
            if r.degenerate { " (degenerate)" } else { "" },
        );
    }
    let fd = &outputs.battery.fixed_data;
    println!(
        "fixed-data {} ({} vs {}): t = {:.4}, p = {:.4}{}",
        fd.metric.column(),
        fd.sample_a,
        fd.sample_b,
        fd.result.t_statistic,
        fd.result.p_value,
        if fd.result.degenerate { " (degenerate)" } else { "" },
    );
    println!("{} artifacts under {}", written.len(), common.out_dir.display());
    Ok(())
}

fn ttest(a: &Path, b: &Path, metric: Metric, pooled: bool) -> Result<(), CliError> {
    let rows_a = load_metrics_csv(a)?;
    let rows_b = load_metrics_csv(b)?;
    let col = |rows: &[crate::bench::MetricsRow]| -> Vec<f64> {
        rows.iter().map(|r| metric.extract(r)).collect()
    };
    let result = if pooled {
        pooled_t(&col(&rows_a), &col(&rows_b))
    } else {
        welch_t(&col(&rows_a), &col(&rows_b))
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let label_a = a.display().to_string();
    let label_b = b.display().to_string();
    print!("{}", emit_ttest_json(metric, &result, &label_a, &label_b));
    Ok(())
}

fn ipfs_check(endpoint: Option<String>) -> Result<(), CliError> {
    let endpoint = endpoint.unwrap_or_else(default_endpoint);
    let probe = b"aquachain ipfs-check probe\n";
    let expected = cid_of_blob(probe);
    let remote = |e: RemoteError| CliError::Runtime(format!("ipfs-check against {endpoint}: {e}"));
    let cid = remote_add(&endpoint, probe).map_err(remote)?;
    println!("added probe: {cid}");
    if cid != expected {
        return Err(CliError::Runtime(format!(
            "daemon CID {cid} differs from embedded CID {expected}; \
             is the daemon honoring raw-leaves/cid-version=1/sha2-256?"
        )));
    }
    let body = remote_cat(&endpoint, &cid).map_err(remote)?;
    if body != probe {
        return Err(CliError::Runtime("cat returned different bytes than added".into()));
    }
    println!("round-trip ok: embedded and daemon CIDs agree ({endpoint})");
    Ok(())
}
