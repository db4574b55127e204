//! Readers and writers for every file the pipeline consumes or emits.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use groupscan_core::attendance::{BinaryAttendance, Concert};
use groupscan_core::ingest::{OuiTable, RawScanRecord, ScanEvent, ScannerMap};
use groupscan_core::microgroups::MicroGroupGraph;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl LogFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => LogFormat::Jsonl,
            _ => LogFormat::Csv,
        }
    }
}

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

fn open(path: &Path) -> Result<File> {
    require(path)?;
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).trim(csv::Trim::All).from_reader(r)
}

/// Parses a scan log. Malformed lines are skipped and reported with their
/// 1-based line number.
pub fn parse_scan_log<R: std::io::Read>(
    reader: R,
    format: LogFormat,
) -> std::io::Result<(Vec<RawScanRecord>, Vec<SkippedLine>)> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    match format {
        LogFormat::Jsonl => {
            for (k, line) in BufReader::new(reader).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<RawScanRecord>(&line) {
                    Ok(r) => records.push(r),
                    Err(e) => skipped.push(SkippedLine { line: k as u64 + 1, reason: e.to_string() }),
                }
            }
        }
        LogFormat::Csv => {
            let mut rdr = csv_reader(reader);
            let headers = match rdr.headers() {
                Ok(h) => h.clone(),
                Err(e) if e.is_io_error() => return Err(into_io(e)),
                Err(_) => return Ok((records, skipped)),
            };
            let mut row = csv::StringRecord::new();
            loop {
                let line = rdr.position().line() + 1;
                match rdr.read_record(&mut row) {
                    Ok(false) => break,
                    Ok(true) => match row.deserialize::<RawScanRecord>(Some(&headers)) {
                        Ok(r) => records.push(r),
                        Err(e) => skipped.push(SkippedLine {
                            line: row.position().map_or(line, |p| p.line()),
                            reason: e.to_string(),
                        }),
                    },
                    Err(e) if e.is_io_error() => return Err(into_io(e)),
                    Err(e) => skipped.push(SkippedLine { line, reason: e.to_string() }),
                }
            }
        }
    }
    Ok((records, skipped))
}

fn into_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

pub fn read_scan_log(path: &Path) -> Result<(Vec<RawScanRecord>, Vec<SkippedLine>)> {
    parse_scan_log(open(path)?, LogFormat::from_path(path)).map_err(|e| CliError::io(path, e))
}

pub fn write_scan_log(path: &Path, records: &[RawScanRecord]) -> Result<()> {
    let out = create(path)?;
    let io = |e| CliError::io(path, e);
    match LogFormat::from_path(path) {
        LogFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r).map_err(|e| CliError::io(path, e.into()))?;
            }
            w.flush().map_err(io)
        }
        LogFormat::Jsonl => {
            let mut out = out;
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(|e| CliError::io(path, e.into()))?;
                out.write_all(b"\n").map_err(io)?;
            }
            out.flush().map_err(io)
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(BufReader::new(open(path)?)).map_err(|e| CliError::input(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(path, e.into()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_scanner_map(path: &Path) -> Result<ScannerMap> {
    let map: ScannerMap = read_json(path)?;
    map.validate().map_err(|e| CliError::input(path, e))?;
    Ok(map)
}

/// Parses `XX:XX:XX<TAB>Vendor` lines; blank lines and `#` comments are
/// ignored.
pub fn parse_oui(text: &str) -> std::result::Result<OuiTable, String> {
    let mut table = OuiTable::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || format!("line {}: expected `XX:XX:XX<TAB>Vendor`", k + 1);
        let (prefix, vendor) = line.split_once('\t').ok_or_else(bad)?;
        let octets: Vec<&str> = prefix.trim().split(':').collect();
        if octets.len() != 3 || octets.iter().any(|o| o.len() != 2) || vendor.trim().is_empty() {
            return Err(bad());
        }
        let mut value = 0u32;
        for o in octets {
            value = (value << 8) | u32::from(u8::from_str_radix(o, 16).map_err(|_| bad())?);
        }
        table.insert(value, vendor.trim());
    }
    Ok(table)
}

pub fn format_oui(table: &OuiTable) -> String {
    let mut out = String::new();
    for (p, vendor) in table.iter() {
        out.push_str(&format!("{:02X}:{:02X}:{:02X}\t{vendor}\n", p >> 16, (p >> 8) & 0xff, p & 0xff));
    }
    out
}

pub fn read_oui(path: &Path) -> Result<OuiTable> {
    require(path)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_oui(&text).map_err(|e| CliError::input(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

/// Reads a schedule and checks that every date is an ISO-8601 calendar day.
pub fn read_schedule(path: &Path) -> Result<Vec<Concert>> {
    let schedule: Vec<Concert> = read_json(path)?;
    for c in &schedule {
        NaiveDate::parse_from_str(&c.date, "%Y-%m-%d").map_err(|e| {
            CliError::input(path, format!("concert {}: date `{}`: {e}", c.concert_id, c.date))
        })?;
    }
    Ok(schedule)
}

/// CSV writer whose first line is a `#` comment carrying `provenance`.
pub fn csv_writer(path: &Path, provenance: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut out = create(path)?;
    writeln!(out, "# {provenance}").map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_rows<T: Serialize>(path: &Path, provenance: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path, provenance)?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv_reader(open(path)?);
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::input(path, format!("line {line}: {e}"))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct EventRow {
    timestamp: i64,
    scanner_id: u32,
    device_id: String,
    vendor: Option<String>,
}

pub fn write_events(path: &Path, provenance: &str, events: &[ScanEvent]) -> Result<()> {
    write_rows(
        path,
        provenance,
        events.iter().map(|e| EventRow {
            timestamp: e.timestamp,
            scanner_id: e.scanner_id,
            device_id: e.device_id.0.clone(),
            vendor: e.vendor.clone(),
        }),
    )
}

pub fn read_events(path: &Path) -> Result<Vec<ScanEvent>> {
    Ok(read_rows::<EventRow>(path)?
        .into_iter()
        .map(|r| ScanEvent {
            timestamp: r.timestamp,
            scanner_id: r.scanner_id,
            device_id: groupscan_core::ingest::DeviceId(r.device_id),
            vendor: r.vendor.filter(|v| !v.is_empty()),
        })
        .collect())
}

/// Row/column labels and threshold of a triplet file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttendanceLabels {
    pub participants: Vec<String>,
    pub concerts: Vec<u32>,
    pub threshold: u32,
}

#[derive(Serialize, Deserialize)]
struct Triplet {
    participant_index: u32,
    concert_index: u32,
    value: u8,
}

pub fn write_triplets(path: &Path, provenance: &str, a: &BinaryAttendance) -> Result<()> {
    write_rows(
        path,
        provenance,
        a.triplets().map(|(i, j)| Triplet { participant_index: i, concert_index: j, value: 1 }),
    )
}

pub fn read_triplets(path: &Path, labels: &AttendanceLabels) -> Result<BinaryAttendance> {
    let mut rows = vec![Vec::new(); labels.participants.len()];
    for t in read_rows::<Triplet>(path)? {
        let row = rows.get_mut(t.participant_index as usize).ok_or_else(|| {
            CliError::input(path, format!("participant index {} out of range", t.participant_index))
        })?;
        if t.value != 0 {
            row.push(t.concert_index);
        }
    }
    BinaryAttendance::new(labels.participants.clone(), labels.concerts.clone(), rows, labels.threshold)
        .map_err(|e| CliError::input(path, e))
}

/// Graph in DOT, with edges labelled by weight.
pub fn to_dot(graph: &MicroGroupGraph) -> String {
    let mut out = String::from("digraph microgroups {\n");
    for (k, name) in graph.nodes.iter().enumerate() {
        out.push_str(&format!("  n{k} [label=\"{name}\"];\n"));
    }
    for e in &graph.edges {
        out.push_str(&format!(
            "  n{} -> n{} [weight={:.4}, label=\"{:.2}\", co={}, locations={}];\n",
            e.from, e.to, e.weight, e.weight, e.co_count, e.locations
        ));
    }
    out.push_str("}\n");
    out
}
