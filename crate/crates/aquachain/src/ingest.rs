//! Smart-water-meter CSV batches: parsing real exports and generating
//! desk-scale synthetic corpora.
//!
//! The canonical schema is three columns, `meter_id,read_at,reading_kl`,
//! UTF-8 with LF line endings. Real exports with other column names can be
//! adapted through [`ColumnMap`].

use std::fmt;

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Reference size of the full-scale corpus this generator stands in for:
/// 3960 files totalling 56.38 GB.
pub const REFERENCE_CORPUS_BYTES: u64 = 56_380_000_000;

const HEADER: &str = "meter_id,read_at,reading_kl";
const METER_POOL_SIZE: u64 = 500;

/// One cumulative meter reading.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub meter_id: String,
    pub read_at: DateTime<Utc>,
    /// Cumulative volume in kilolitres; non-negative.
    pub reading_kl: f64,
}

/// A generated batch file: id, rows, and the exact CSV bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFile {
    pub file_id: String,
    pub readings: Vec<MeterReading>,
    pub encoded: Vec<u8>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("bad header: expected {HEADER:?}, got {0:?}")]
    BadHeader(String),
    #[error("input is not valid UTF-8")]
    NotUtf8,
}

/// A rejected row: 1-based line number (the header is line 1) plus reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Maps foreign column names onto the canonical schema.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub meter: String,
    pub time: String,
    pub reading: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap { meter: "meter_id".into(), time: "read_at".into(), reading: "reading_kl".into() }
    }
}

/// Valid readings plus the rows that were rejected.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub readings: Vec<MeterReading>,
    pub errors: Vec<RowError>,
}

/// Parses canonical-schema CSV. Bad rows are reported with their line number
/// and skipped; parsing continues.
pub fn parse_meter_csv(data: &[u8]) -> Result<ParseOutcome, IngestError> {
    parse_meter_csv_with_columns(data, &ColumnMap::default())
}

/// Like [`parse_meter_csv`] but resolves columns by the given names, in any
/// order, ignoring extra columns. Adapts real data-portal exports.
pub fn parse_meter_csv_with_columns(
    data: &[u8],
    map: &ColumnMap,
) -> Result<ParseOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(data);
    let headers = reader
        .headers()
        .map_err(|_| IngestError::NotUtf8)?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (mi, ti, ri) = match (find(&map.meter), find(&map.time), find(&map.reading)) {
        (Some(m), Some(t), Some(r)) => (m, t, r),
        _ => {
            return Err(IngestError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")))
        }
    };

    let mut out = ParseOutcome::default();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.errors.push(RowError { line, reason: e.to_string() });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fail = |reason: String| RowError { line, reason };
        let field = |idx: usize| record.get(idx).filter(|s| !s.is_empty());

        let meter_id = match field(mi) {
            Some(s) => s.to_string(),
            None => {
                out.errors.push(fail("missing meter_id".into()));
                continue;
            }
        };
        let read_at = match field(ti).map(parse_timestamp) {
            Some(Ok(t)) => t,
            Some(Err(e)) => {
                out.errors.push(fail(format!("unparseable timestamp: {e}")));
                continue;
            }
            None => {
                out.errors.push(fail("missing read_at".into()));
                continue;
            }
        };
        let reading_kl = match field(ri).map(str::parse::<f64>) {
            Some(Ok(v)) if v.is_finite() && v >= 0.0 => v,
            Some(Ok(v)) => {
                out.errors.push(fail(format!("negative or non-finite reading_kl: {v}")));
                continue;
            }
            Some(Err(e)) => {
                out.errors.push(fail(format!("unparseable reading_kl: {e}")));
                continue;
            }
            None => {
                out.errors.push(fail("missing reading_kl".into()));
                continue;
            }
        };
        out.readings.push(MeterReading { meter_id, read_at, reading_kl });
    }
    Ok(out)
}

fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc))
}

/// Encodes readings as canonical CSV (header, RFC 3339 timestamps, three
/// decimal places, LF endings).
pub fn encode_meter_csv(readings: &[MeterReading]) -> Vec<u8> {
    let mut out = String::with_capacity(32 + readings.len() * 40);
    out.push_str(HEADER);
    out.push('\n');
    for r in readings {
        out.push_str(&r.meter_id);
        out.push(',');
        out.push_str(&r.read_at.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        out.push(',');
        out.push_str(&format!("{:.3}", r.reading_kl));
        out.push('\n');
    }
    out.into_bytes()
}

/// Generates `n_files` batches of `records_per_file` rows, deterministic by
/// seed. Meter ids come from a fixed pool, timestamps ascend hourly, and
/// readings are cumulative with nonnegative increments so the per-meter
/// monotonicity invariant holds by construction.
///
/// Each file draws from its own generator seeded by a (seed, file index)
/// mix, so files may be produced in parallel without changing the output.
pub fn generate_synthetic(n_files: usize, records_per_file: usize, seed: u64) -> Vec<BatchFile> {
    (0..n_files).map(|i| generate_file(i, records_per_file, mix_seed(seed, i as u64))).collect()
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed, index); decorrelates nearby seeds.
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hourly wall-clock counter used by the generator's hot path. Produces the
/// same RFC 3339 strings chrono's `%Y-%m-%dT%H:%M:%SZ` formatting would,
/// which a unit test pins.
struct HourClock {
    year: u32,
    month: u32,
    day: u32,
    hour: u32,
}

impl HourClock {
    /// Epoch is 2022-01-01T00:00:00Z.
    fn at_hours_since_epoch(hours: u64) -> HourClock {
        let mut clock = HourClock { year: 2022, month: 1, day: 1, hour: (hours % 24) as u32 };
        let mut days = hours / 24;
        loop {
            let month_days = days_in_month(clock.year, clock.month) as u64;
            let remaining = month_days - clock.day as u64 + 1;
            if days < remaining {
                clock.day += days as u32;
                break;
            }
            days -= remaining;
            clock.day = 1;
            clock.next_month();
        }
        clock
    }

    fn next_month(&mut self) {
        if self.month == 12 {
            self.month = 1;
            self.year += 1;
        } else {
            self.month += 1;
        }
    }

    fn advance_hour(&mut self) {
        self.hour += 1;
        if self.hour == 24 {
            self.hour = 0;
            self.day += 1;
            if self.day > days_in_month(self.year, self.month) {
                self.day = 1;
                self.next_month();
            }
        }
    }

    fn write_rfc3339(&self, out: &mut String) {
        use std::fmt::Write;
        write!(
            out,
            "{:04}-{:02}-{:02}T{:02}:00:00Z",
            self.year, self.month, self.day, self.hour
        )
        .expect("writing to string");
    }
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            if year.is_multiple_of(4) && (!year.is_multiple_of(100) || year.is_multiple_of(400)) {
                29
            } else {
                28
            }
        }
    }
}

// Cumulative kilolitres with exactly three decimals from a whole-litre
// level; identical to `format!("{:.3}", level_l as f64 / 1000.0)`.
fn push_kl(out: &mut String, level_l: u64) {
    use std::fmt::Write;
    write!(out, "{}.{:03}", level_l / 1000, level_l % 1000).expect("writing to string");
}

// Drives one file's row stream: emit(meter_id, level_l, rfc3339_stamp).
fn for_each_row(
    file_index: usize,
    records: usize,
    seed: u64,
    mut emit: impl FnMut(&str, u64, &str),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_meters = rng.random_range(2..=8usize);
    let mut ids = Vec::with_capacity(n_meters);
    let mut levels = Vec::with_capacity(n_meters);
    for _ in 0..n_meters {
        let id = rng.random_range(0..METER_POOL_SIZE);
        // levels kept in whole litres so the 3-decimal CSV form is exact
        ids.push(format!("WM-{id:05}"));
        levels.push(rng.random_range(0..500_000u64));
    }
    let mut clock = HourClock::at_hours_since_epoch(file_index as u64);
    let mut stamp = String::with_capacity(20);
    for row in 0..records {
        let m = row % n_meters;
        levels[m] += rng.random_range(0..=50u64);
        stamp.clear();
        clock.write_rfc3339(&mut stamp);
        emit(&ids[m], levels[m], &stamp);
        clock.advance_hour();
    }
}

fn encode_rows_csv(file_index: usize, records: usize, seed: u64) -> Vec<u8> {
    let mut encoded = String::with_capacity(32 + records * 40);
    encoded.push_str(HEADER);
    encoded.push('\n');
    for_each_row(file_index, records, seed, |meter_id, level_l, stamp| {
        encoded.push_str(meter_id);
        encoded.push(',');
        encoded.push_str(stamp);
        encoded.push(',');
        push_kl(&mut encoded, level_l);
        encoded.push('\n');
    });
    encoded.into_bytes()
}

fn generate_file(file_index: usize, records: usize, seed: u64) -> BatchFile {
    let start = Utc
        .with_ymd_and_hms(2022, 1, 1, 0, 0, 0)
        .unwrap()
        .checked_add_signed(chrono::Duration::hours(file_index as i64))
        .unwrap();
    let mut readings = Vec::with_capacity(records);
    for_each_row(file_index, records, seed, |meter_id, level_l, _stamp| {
        readings.push(MeterReading {
            meter_id: meter_id.to_string(),
            read_at: start + chrono::Duration::hours(readings.len() as i64),
            reading_kl: level_l as f64 / 1000.0,
        });
    });
    let encoded = encode_rows_csv(file_index, records, seed);
    debug_assert_eq!(encoded, encode_meter_csv(&readings));
    BatchFile { file_id: format!("synthetic-{file_index}"), readings, encoded }
}

/// The payload-only fast path for the benchmark harness: (file_id, CSV
/// bytes) pairs, byte-identical to [`generate_synthetic`]'s encoded field.
pub fn generate_payloads(
    n_files: usize,
    payload_bytes: usize,
    seed: u64,
) -> Vec<(String, Vec<u8>)> {
    let records = records_for(payload_bytes);
    (0..n_files)
        .map(|i| {
            (format!("synthetic-{i}"), encode_rows_csv(i, records, mix_seed(seed, i as u64)))
        })
        .collect()
}

fn records_for(payload_bytes: usize) -> usize {
    // ~39 bytes per row at typical reading magnitudes
    (payload_bytes / 39).max(1)
}

/// Generates batches whose encoded size approximates `payload_bytes`.
pub fn generate_synthetic_sized(
    n_files: usize,
    payload_bytes: usize,
    seed: u64,
) -> Vec<BatchFile> {
    generate_synthetic(n_files, records_for(payload_bytes), seed)
}
