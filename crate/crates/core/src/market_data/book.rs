use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::BufRead;

use super::decimal::{Decimal, TickSize};
use super::{header_fields, malformed, MarketDataError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub price: i64,
    pub volume: u64,
}

/// Multi-level book state. Bids best first (descending), asks best first
/// (ascending). Prices in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub timestamp_ns: i64,
    pub bids: Vec<Level>,
    pub asks: Vec<Level>,
    /// Trades executed since the previous snapshot.
    pub trade_count_delta: u64,
}

/// Why a snapshot failed validation; mapped onto a line number by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookViolation {
    Crossed,
    LadderOrder,
    Depth,
    ZeroVolume,
}

impl BookSnapshot {
    pub fn validate(&self, depth: usize) -> std::result::Result<(), BookViolation> {
        if self.bids.len() > depth || self.asks.len() > depth {
            return Err(BookViolation::Depth);
        }
        if self.bids.iter().chain(&self.asks).any(|l| l.volume == 0) {
            return Err(BookViolation::ZeroVolume);
        }
        if self.bids.windows(2).any(|w| w[1].price >= w[0].price)
            || self.asks.windows(2).any(|w| w[1].price <= w[0].price)
        {
            return Err(BookViolation::LadderOrder);
        }
        if let (Some(b), Some(a)) = (self.bids.first(), self.asks.first()) {
            if b.price >= a.price {
                return Err(BookViolation::Crossed);
            }
        }
        Ok(())
    }

    pub fn spread(&self) -> Option<i64> {
        Some(self.asks.first()?.price - self.bids.first()?.price)
    }

    pub fn bid_volume(&self, depth: usize) -> u64 {
        self.bids.iter().take(depth).map(|l| l.volume).sum()
    }

    pub fn ask_volume(&self, depth: usize) -> u64 {
        self.asks.iter().take(depth).map(|l| l.volume).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BookFile {
    pub tick_size: TickSize,
    /// Column layout depth from the header.
    pub depth: usize,
    pub snapshots: Vec<BookSnapshot>,
}

impl BookFile {
    /// Running total of `trade_count_delta`, aligned with `snapshots`.
    pub fn cumulative_trades(&self) -> Vec<u64> {
        self.snapshots
            .iter()
            .scan(0u64, |acc, s| {
                *acc += s.trade_count_delta;
                Some(*acc)
            })
            .collect()
    }
}

fn column_header(depth: usize) -> String {
    let mut cols = String::from("timestamp_ns,trade_count_delta");
    for side in ["bid", "ask"] {
        for i in 1..=depth {
            let _ = write!(cols, ",{side}_px_{i},{side}_vol_{i}");
        }
    }
    cols
}

/// Reads a book CSV with header `# tick_size=<decimal> depth=<N>`. Every
/// snapshot is validated and may hold at most `max_depth` levels per side.
pub fn parse_book<R: BufRead>(reader: R, max_depth: usize) -> Result<BookFile> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| MarketDataError::BadHeader("empty input".into()))?;
    let header = header?;
    let fields = header_fields(&header).ok_or_else(|| MarketDataError::BadHeader(header.clone()))?;
    let lookup = |key: &str| fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let tick_size = lookup("tick_size")
        .and_then(TickSize::parse)
        .ok_or_else(|| MarketDataError::BadHeader(header.clone()))?;
    let depth: usize = lookup("depth")
        .and_then(|v| v.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| MarketDataError::BadHeader(header.clone()))?;
    let columns = column_header(depth);

    let mut snapshots = Vec::new();
    let mut last_ts = i64::MIN;
    for (line_no, line) in lines {
        let line = line?;
        let row = line.trim_end_matches('\r');
        if row.is_empty() || row.starts_with('#') || row == columns {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 + 4 * depth {
            return Err(malformed(
                line_no,
                format!("expected {} fields, got {}", 2 + 4 * depth, cells.len()),
            ));
        }
        let timestamp_ns: i64 = cells[0].trim().parse().map_err(|_| malformed(line_no, "bad timestamp"))?;
        if timestamp_ns <= 0 {
            return Err(malformed(line_no, "timestamp must be positive"));
        }
        if timestamp_ns < last_ts {
            return Err(MarketDataError::NonMonotonicTime { line: line_no });
        }
        last_ts = timestamp_ns;
        let trade_count_delta: u64 = cells[1]
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, "bad trade_count_delta"))?;

        let bids = parse_side(&cells[2..2 + 2 * depth], tick_size, line_no)?;
        let asks = parse_side(&cells[2 + 2 * depth..], tick_size, line_no)?;
        let snap = BookSnapshot {
            timestamp_ns,
            bids,
            asks,
            trade_count_delta,
        };
        snap.validate(max_depth).map_err(|v| match v {
            BookViolation::Crossed => MarketDataError::CrossedBook { line: line_no },
            BookViolation::LadderOrder => MarketDataError::LadderOrderViolation { line: line_no },
            BookViolation::Depth => MarketDataError::DepthExceeded {
                line: line_no,
                depth: max_depth,
            },
            BookViolation::ZeroVolume => malformed(line_no, "level volume must be positive"),
        })?;
        snapshots.push(snap);
    }
    Ok(BookFile {
        tick_size,
        depth,
        snapshots,
    })
}

fn parse_side(cells: &[&str], tick_size: TickSize, line: usize) -> Result<Vec<Level>> {
    let mut levels = Vec::new();
    let mut ended = false;
    for pair in cells.chunks(2) {
        let (px, vol) = (pair[0].trim(), pair[1].trim());
        match (px.is_empty(), vol.is_empty()) {
            (true, true) => ended = true,
            (false, false) => {
                if ended {
                    // a populated level below an empty one
                    return Err(MarketDataError::LadderOrderViolation { line });
                }
                let price: Decimal = px.parse().map_err(|_| malformed(line, "bad price"))?;
                let price = tick_size
                    .ticks_of(price)
                    .ok_or(MarketDataError::TickSizeViolation { line })?;
                let volume: u64 = vol.parse().map_err(|_| malformed(line, "bad volume"))?;
                levels.push(Level { price, volume });
            }
            _ => return Err(malformed(line, "price and volume must both be present or both empty")),
        }
    }
    Ok(levels)
}

/// Canonical book CSV at the file's layout depth.
pub fn write_book(file: &BookFile) -> String {
    let mut out = format!(
        "# tick_size={} depth={}\n{}\n",
        file.tick_size,
        file.depth,
        column_header(file.depth)
    );
    for s in &file.snapshots {
        let _ = write!(out, "{},{}", s.timestamp_ns, s.trade_count_delta);
        for side in [&s.bids, &s.asks] {
            for i in 0..file.depth {
                match side.get(i) {
                    Some(l) => {
                        let _ = write!(out, ",{},{}", file.tick_size.format_price(l.price), l.volume);
                    }
                    None => out.push_str(",,"),
                }
            }
        }
        out.push('\n');
    }
    out
}
