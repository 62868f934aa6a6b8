//! Artifact emitters: metrics CSV, t-test report JSON, and SVG line charts.
//!
//! All output is deterministic. Floats are written with Rust's shortest
//! round-trip formatting, so reloading a CSV reproduces the exact values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::battery::BenchOutputs;
use super::metrics::{BenchError, Metric, MetricsRow};
use crate::stats::TTestResult;

/// Exact column order of the metrics CSV.
pub const CSV_HEADER: &str =
    "scenario,run,n_nodes,tx_target,block_number,block_time_s,finality_latency_s,block_size_bytes,tx_count,tps";

const SVG_PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Renders rows as CSV text.
pub fn emit_csv(rows: &[MetricsRow]) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptySeries);
    }
    let mut out = String::with_capacity(rows.len() * 64 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.run,
            r.n_nodes,
            r.tx_target,
            r.block_number,
            r.block_time_s,
            r.finality_latency_s,
            r.block_size_bytes,
            r.tx_count,
            r.tps
        )
        .expect("writing to string");
    }
    Ok(out)
}

/// Parses a metrics CSV produced by [`emit_csv`].
pub fn load_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, BenchError> {
    let text = fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
    let bad = |line: usize, reason: String| BenchError::BadCsv {
        path: path.display().to_string(),
        reason: format!("line {line}: {reason}"),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(bad(1, format!("expected header {CSV_HEADER:?}, got {other:?}")));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(bad(i + 2, format!("expected 10 fields, got {}", fields.len())));
        }
        let parse_err = |what: &str, e: &dyn std::fmt::Display| {
            bad(i + 2, format!("bad {what}: {e}"))
        };
        rows.push(MetricsRow {
            scenario: fields[0].to_string(),
            run: fields[1].parse().map_err(|e| parse_err("run", &e))?,
            n_nodes: fields[2].parse().map_err(|e| parse_err("n_nodes", &e))?,
            tx_target: fields[3].parse().map_err(|e| parse_err("tx_target", &e))?,
            block_number: fields[4].parse().map_err(|e| parse_err("block_number", &e))?,
            block_time_s: fields[5].parse().map_err(|e| parse_err("block_time_s", &e))?,
            finality_latency_s: fields[6]
                .parse()
                .map_err(|e| parse_err("finality_latency_s", &e))?,
            block_size_bytes: fields[7]
                .parse()
                .map_err(|e| parse_err("block_size_bytes", &e))?,
            tx_count: fields[8].parse().map_err(|e| parse_err("tx_count", &e))?,
            tps: fields[9].parse().map_err(|e| parse_err("tps", &e))?,
        });
    }
    if rows.is_empty() {
        return Err(BenchError::EmptySeries);
    }
    Ok(rows)
}

#[derive(Serialize)]
struct TTestReport<'a> {
    metric: &'a str,
    t_statistic: f64,
    df: f64,
    p_value: f64,
    mean_a: f64,
    mean_b: f64,
    n_a: usize,
    n_b: usize,
    degenerate: bool,
    sample_a: &'a str,
    sample_b: &'a str,
}

/// Renders a t-test result as the report JSON.
pub fn emit_ttest_json(
    metric: Metric,
    result: &TTestResult,
    sample_a: &str,
    sample_b: &str,
) -> String {
    let report = TTestReport {
        metric: metric.column(),
        t_statistic: result.t_statistic,
        df: result.df,
        p_value: result.p_value,
        mean_a: result.mean_a,
        mean_b: result.mean_b,
        n_a: result.n_a,
        n_b: result.n_b,
        degenerate: result.degenerate,
        sample_a,
        sample_b,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

/// One polyline of an SVG chart.
#[derive(Debug, Clone)]
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Renders a line chart: one polyline per series, labeled axes, fixed
/// 720x480 canvas.
pub fn emit_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[SvgSeries],
) -> Result<String, BenchError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(BenchError::EmptySeries);
    }
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const ML: f64 = 80.0; // left margin
    const MR: f64 = 30.0;
    const MT: f64 = 40.0;
    const MB: f64 = 60.0;

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x_min, x_max) = bounds(xs);
    let (y_min, y_max) = bounds(ys);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let sx = |x: f64| ML + (x - x_min) / x_span * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_min) / y_span * (H - MT - MB);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(out, "  <title>{}</title>", xml_escape(title)).unwrap();
    writeln!(out, "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        xml_escape(title)
    )
    .unwrap();

    // axes
    writeln!(
        out,
        "  <line x1=\"{ML:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    writeln!(
        out,
        "  <line x1=\"{ML:.2}\" y1=\"{MT:.2}\" x2=\"{ML:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB
    )
    .unwrap();

    // ticks and grid labels
    for i in 0..=4 {
        let fx = x_min + x_span * i as f64 / 4.0;
        let px = sx(fx);
        writeln!(
            out,
            "  <line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            H - MB + 18.0,
            fmt_tick(fx)
        )
        .unwrap();

        let fy = y_min + y_span * i as f64 / 4.0;
        let py = sy(fy);
        writeln!(
            out,
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{ML:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>",
            ML - 5.0
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            ML - 8.0,
            py + 4.0,
            fmt_tick(fy)
        )
        .unwrap();
    }

    // axis titles
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        H - 18.0,
        xml_escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        "  <text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        xml_escape(y_label)
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let points: Vec<String> =
            s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        writeln!(
            out,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        )
        .unwrap();
        // legend entry
        let ly = MT + 16.0 * i as f64;
        writeln!(
            out,
            "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            W - MR - 110.0,
            W - MR - 90.0
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            W - MR - 84.0,
            ly + 4.0,
            xml_escape(&s.label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v.fract() == 0.0 && v.abs() < 1e9) {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Per-run mean of a metric at each scan point: the chart series for one
/// scenario.
pub fn scenario_series(
    rows: &[MetricsRow],
    scans_tx_counts: bool,
    metric: Metric,
    runs: usize,
) -> Vec<SvgSeries> {
    let mut series = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut by_x: std::collections::BTreeMap<usize, (f64, usize)> =
            std::collections::BTreeMap::new();
        for row in rows.iter().filter(|r| r.run == run) {
            let x = if scans_tx_counts { row.tx_target } else { row.n_nodes };
            let entry = by_x.entry(x).or_insert((0.0, 0));
            entry.0 += metric.extract(row);
            entry.1 += 1;
        }
        let points: Vec<(f64, f64)> =
            by_x.into_iter().map(|(x, (sum, n))| (x as f64, sum / n as f64)).collect();
        series.push(SvgSeries { label: format!("run {}", run + 1), points });
    }
    series
}

/// Writes the full artifact tree for one `bench all` invocation and returns
/// the paths written.
pub fn write_artifacts(outputs: &BenchOutputs, out_dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let io_err = |path: &Path| {
        let display = path.display().to_string();
        move |source: std::io::Error| BenchError::Io { path: display.clone(), source }
    };
    let svg_dir = out_dir.join("svg");
    fs::create_dir_all(&svg_dir).map_err(io_err(&svg_dir))?;

    let mut written = Vec::new();
    let write = |path: PathBuf, content: String| -> Result<PathBuf, BenchError> {
        fs::write(&path, content).map_err(io_err(&path))?;
        Ok(path)
    };

    for (name, rows) in &outputs.scenarios {
        let path = out_dir.join(format!("scenario_{}.csv", name.label()));
        written.push(write(path, emit_csv(rows)?)?);
        for metric in Metric::ALL {
            let series = scenario_series(rows, name.scans_tx_counts(), metric, outputs.runs);
            let x_label =
                if name.scans_tx_counts() { "data hashes per run" } else { "validator nodes" };
            let svg = emit_svg(
                &format!("{}: {}", name.label(), metric.column()),
                x_label,
                metric.axis_label(),
                &series,
            )?;
            let path = svg_dir.join(format!("{}_{}.svg", name.label(), metric.column()));
            written.push(write(path, svg)?);
        }
    }

    let battery = &outputs.battery;
    written.push(write(
        out_dir.join("battery_fixed_nodes_anchor.csv"),
        emit_csv(&battery.fixed_nodes_anchor_rows)?,
    )?);
    written.push(write(
        out_dir.join("battery_fixed_nodes_raw.csv"),
        emit_csv(&battery.fixed_nodes_raw_rows)?,
    )?);
    for test in &battery.fixed_nodes {
        let path = out_dir.join(format!("ttest_fixed_nodes_{}.json", test.metric.column()));
        written.push(write(
            path,
            emit_ttest_json(test.metric, &test.result, &test.sample_a, &test.sample_b),
        )?);
    }
    let fd = &battery.fixed_data;
    written.push(write(
        out_dir.join(format!("ttest_fixed_data_{}.json", fd.metric.column())),
        emit_ttest_json(fd.metric, &fd.result, &fd.sample_a, &fd.sample_b),
    )?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::welch_t;

    fn sample_rows() -> Vec<MetricsRow> {
        (0..4)
            .map(|i| MetricsRow {
                scenario: "A_IPFS_FIXED_NODES".into(),
                run: i % 2,
                n_nodes: 10,
                tx_target: 10 * (i + 1),
                block_number: 1,
                block_time_s: 6.0,
                finality_latency_s: 1.05 + i as f64 / 64.0,
                block_size_bytes: 1000 + 100 * i as u64,
                tx_count: 10 * (i + 1),
                tps: 10.0 * (i + 1) as f64 / 6.0,
            })
            .collect()
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = sample_rows();
        let text = emit_csv(&rows).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        std::fs::write(&path, &text).unwrap();
        let loaded = load_metrics_csv(&path).unwrap();
        assert_eq!(loaded, rows);
    }

    #[test]
    fn empty_series_is_refused() {
        assert!(matches!(emit_csv(&[]), Err(BenchError::EmptySeries)));
        assert!(matches!(emit_svg("t", "x", "y", &[]), Err(BenchError::EmptySeries)));
    }

    #[test]
    fn ttest_json_has_expected_keys() {
        let r = welch_t(&[1.0, 2.0, 3.0], &[4.0, 5.0, 7.0]).unwrap();
        let json = emit_ttest_json(Metric::Tps, &r, "anchor", "raw");
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in
            ["metric", "t_statistic", "df", "p_value", "mean_a", "mean_b", "n_a", "n_b"]
        {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["metric"], "tps");
        assert_eq!(value["n_a"], 3);
    }

    #[test]
    fn svg_is_structurally_sound() {
        let series = vec![
            SvgSeries { label: "run 1".into(), points: vec![(1.0, 2.0), (2.0, 4.0)] },
            SvgSeries { label: "run 2".into(), points: vec![(1.0, 3.0), (2.0, 1.0)] },
        ];
        let svg = emit_svg("demo", "x", "y", &series).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("</svg>"));
        // deterministic
        assert_eq!(svg, emit_svg("demo", "x", "y", &series).unwrap());
    }
}
