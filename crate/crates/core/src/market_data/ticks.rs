use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::BufRead;

use super::decimal::{Decimal, TickSize};
use super::{header_fields, malformed, MarketDataError, Result};

pub const TICK_COLUMNS: &str = "timestamp_ns,price,kind,volume";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickKind {
    Quote,
    Trade,
}

impl TickKind {
    fn code(self) -> &'static str {
        match self {
            TickKind::Quote => "Q",
            TickKind::Trade => "T",
        }
    }
}

/// One market update. `price` is in integer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickEvent {
    pub timestamp_ns: i64,
    pub price: i64,
    pub kind: TickKind,
    pub volume: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickFile {
    pub tick_size: TickSize,
    pub events: Vec<TickEvent>,
}

/// Reads a tick CSV: `# tick_size=<decimal>` header, optional column line,
/// then `timestamp_ns,price,kind,volume` rows.
pub fn parse_ticks<R: BufRead>(reader: R) -> Result<TickFile> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| MarketDataError::BadHeader("empty input".into()))?;
    let header = header?;
    let tick_size = header_fields(&header)
        .and_then(|f| f.into_iter().find(|(k, _)| *k == "tick_size"))
        .and_then(|(_, v)| TickSize::parse(v))
        .ok_or_else(|| MarketDataError::BadHeader(header.clone()))?;

    let mut events = Vec::new();
    let mut last_ts = i64::MIN;
    for (line_no, line) in lines {
        let line = line?;
        let row = line.trim_end_matches('\r');
        if row.is_empty() || row == TICK_COLUMNS || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(line_no, format!("expected 4 fields, got {}", fields.len())));
        }
        let timestamp_ns: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, "bad timestamp"))?;
        if timestamp_ns <= 0 {
            return Err(malformed(line_no, "timestamp must be positive"));
        }
        if timestamp_ns < last_ts {
            return Err(MarketDataError::NonMonotonicTime { line: line_no });
        }
        last_ts = timestamp_ns;
        let price: Decimal = fields[1].parse().map_err(|_| malformed(line_no, "bad price"))?;
        let price = tick_size
            .ticks_of(price)
            .ok_or(MarketDataError::TickSizeViolation { line: line_no })?;
        let kind = match fields[2].trim() {
            "Q" => TickKind::Quote,
            "T" => TickKind::Trade,
            other => return Err(malformed(line_no, format!("unknown kind {other:?}"))),
        };
        let volume: u64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, "bad volume"))?;
        events.push(TickEvent {
            timestamp_ns,
            price,
            kind,
            volume,
        });
    }
    Ok(TickFile { tick_size, events })
}

/// Canonical tick CSV. `parse_ticks(write_ticks(f))` reproduces `f`.
pub fn write_ticks(file: &TickFile) -> String {
    let mut out = format!("# tick_size={}\n{TICK_COLUMNS}\n", file.tick_size);
    for e in &file.events {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.timestamp_ns,
            file.tick_size.format_price(e.price),
            e.kind.code(),
            e.volume
        );
    }
    out
}
