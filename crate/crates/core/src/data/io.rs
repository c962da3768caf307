//! Reading and writing interaction logs (CSV or JSONL) plus feature sidecars.
//!
//! Sidecar files sit next to the interactions file: for `logs/events.csv` the
//! user features are `logs/events.users.csv` and item features
//! `logs/events.items.csv`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Deserialize;

use super::{Dataset, FeatureTable, InteractionEvent, InteractionKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Jsonl,
}

impl EventFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(EventFormat::Csv),
            "jsonl" | "ndjson" => Some(EventFormat::Jsonl),
            _ => None,
        }
    }
}

impl std::str::FromStr for EventFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EventFormat::Csv),
            "jsonl" => Ok(EventFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!("unknown event format {other:?}"))),
        }
    }
}

pub fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    (
        dir.join(format!("{stem}.users.csv")),
        dir.join(format!("{stem}.items.csv")),
    )
}

/// Loads an interactions file, attaching feature sidecars when present.
pub fn load_events(path: &Path, format: EventFormat) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let events = read_events(BufReader::new(file), format)?;
    let (users_path, items_path) = sidecar_paths(path);
    let user_features = load_sidecar(&users_path)?;
    let item_features = load_sidecar(&items_path)?;
    Dataset::new(events, user_features, item_features)
}

fn load_sidecar(path: &Path) -> Result<FeatureTable> {
    if !path.exists() {
        return Ok(FeatureTable::default());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    FeatureTable::read_csv(BufReader::new(file), &path.display().to_string())
}

#[derive(Deserialize)]
struct RawEvent {
    user_id: String,
    item_id: String,
    kind: String,
    timestamp: String,
    #[serde(default)]
    quantity: Option<i64>,
}

fn convert(raw: RawEvent, line: usize) -> Result<InteractionEvent> {
    let kind = match raw.kind.trim().to_ascii_lowercase().as_str() {
        "sale" => InteractionKind::Sale,
        "view" => InteractionKind::View,
        _ => {
            return Err(Error::UnknownKind {
                line,
                kind: raw.kind,
            })
        }
    };
    let timestamp = DateTime::parse_from_rfc3339(raw.timestamp.trim())
        .map_err(|e| Error::MalformedRecord {
            line,
            reason: format!("timestamp {:?}: {e}", raw.timestamp),
        })?
        .with_timezone(&Utc);
    let quantity = raw.quantity.unwrap_or(1);
    if quantity <= 0 {
        return Err(Error::NonPositiveQuantity { line, quantity });
    }
    if kind == InteractionKind::View && quantity != 1 {
        return Err(Error::MalformedRecord {
            line,
            reason: format!("view events carry quantity 1, got {quantity}"),
        });
    }
    let quantity = u32::try_from(quantity).map_err(|_| Error::MalformedRecord {
        line,
        reason: format!("quantity {quantity} out of range"),
    })?;
    if raw.user_id.is_empty() || raw.item_id.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            reason: "empty user_id or item_id".into(),
        });
    }
    Ok(InteractionEvent {
        user_id: raw.user_id,
        item_id: raw.item_id,
        kind,
        timestamp,
        quantity,
    })
}

pub fn read_events<R: BufRead>(reader: R, format: EventFormat) -> Result<Vec<InteractionEvent>> {
    match format {
        EventFormat::Csv => read_csv(reader),
        EventFormat::Jsonl => read_jsonl(reader),
    }
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<InteractionEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedRecord {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Ok(events);
    }
    loop {
        let line = rdr.position().line() as usize;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(Error::MalformedRecord {
                    line,
                    reason: e.to_string(),
                })
            }
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(line);
        let raw: RawEvent = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::MalformedRecord {
                line,
                reason: e.to_string(),
            })?;
        events.push(convert(raw, line)?);
    }
    Ok(events)
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<InteractionEvent>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEvent = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        events.push(convert(raw, line_no)?);
    }
    Ok(events)
}

fn format_ts(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn write_events_to<W: Write>(
    events: &[InteractionEvent],
    writer: W,
    format: EventFormat,
) -> Result<()> {
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    match format {
        EventFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(["user_id", "item_id", "kind", "timestamp", "quantity"])
                .map_err(ser)?;
            for e in events {
                wtr.write_record([
                    e.user_id.as_str(),
                    e.item_id.as_str(),
                    e.kind.as_str(),
                    &format_ts(&e.timestamp),
                    &e.quantity.to_string(),
                ])
                .map_err(ser)?;
            }
            wtr.flush().map_err(|e| Error::Serde(e.to_string()))
        }
        EventFormat::Jsonl => {
            let mut w = writer;
            for e in events {
                let obj = serde_json::json!({
                    "user_id": e.user_id,
                    "item_id": e.item_id,
                    "kind": e.kind.as_str(),
                    "timestamp": format_ts(&e.timestamp),
                    "quantity": e.quantity,
                });
                writeln!(w, "{obj}").map_err(|e| Error::Serde(e.to_string()))?;
            }
            w.flush().map_err(|e| Error::Serde(e.to_string()))
        }
    }
}

/// Writes the events file and, when the dataset carries features, its sidecars.
pub fn write_events(data: &Dataset, path: &Path, format: EventFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events_to(data.events(), BufWriter::new(file), format)?;
    let (users_path, items_path) = sidecar_paths(path);
    for (table, p) in [(&data.user_features, users_path), (&data.item_features, items_path)] {
        if table.columns().is_empty() && table.is_empty() {
            continue;
        }
        let file = File::create(&p).map_err(|e| Error::io(&p, e))?;
        table.write_csv(BufWriter::new(file))?;
    }
    Ok(())
}
