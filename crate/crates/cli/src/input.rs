use chrono::{NaiveTime, Timelike};
use std::path::Path;

use tickphys::market_data::{
    parse_book, parse_ticks, sessionize, BookFile, DaySlice, RegularSeries, SessionHours,
};

use crate::args::SessionArgs;
use crate::error::{data, io, CliError};

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| io(path, e))
}

/// `None` when no `--session` was given.
pub fn session_hours(a: &SessionArgs) -> Result<Option<SessionHours>, CliError> {
    let Some(spec) = &a.session else {
        if a.tz != "UTC" {
            return Err(CliError::Usage("--tz needs --session".into()));
        }
        return Ok(None);
    };
    let bad = || CliError::Usage(format!("--session: expected HH:MM-HH:MM, got {spec:?}"));
    let (open, close) = spec.split_once('-').ok_or_else(bad)?;
    let t = |s: &str| NaiveTime::parse_from_str(s.trim(), "%H:%M").map_err(|_| bad());
    let tz = a
        .tz
        .parse()
        .map_err(|_| CliError::Usage(format!("--tz: unknown time zone {:?}", a.tz)))?;
    SessionHours::new(t(open)?, t(close)?, tz)
        .map(Some)
        .map_err(|e| CliError::Usage(format!("--session: {e}")))
}

fn utc_days(timestamps: impl Iterator<Item = i64>) -> usize {
    let mut days: Vec<i64> = timestamps.map(|t| t.div_euclid(86_400_000_000_000)).collect();
    days.dedup();
    days.len()
}

fn hours_or_default(hours: Option<SessionHours>, timestamps: impl Iterator<Item = i64>) -> Result<SessionHours, CliError> {
    match hours {
        Some(h) => Ok(h),
        None if utc_days(timestamps) > 1 => Err(CliError::Data(
            "input spans several days: pass --session HH:MM-HH:MM (and --tz)".into(),
        )),
        None => Ok(SessionHours::all_day_utc()),
    }
}

pub struct Ticks {
    pub days: Vec<DaySlice>,
    pub dropped: usize,
}

pub fn ticks(bytes: &[u8], hours: Option<SessionHours>) -> Result<Ticks, CliError> {
    let file = parse_ticks(bytes).map_err(data)?;
    if file.events.is_empty() {
        return Err(CliError::Data("tick file has no events".into()));
    }
    let hours = hours_or_default(hours, file.events.iter().map(|e| e.timestamp_ns))?;
    let s = sessionize(&file.events, &hours);
    if s.days.is_empty() {
        return Err(CliError::Data("no ticks inside the session hours".into()));
    }
    Ok(Ticks {
        days: s.days,
        dropped: s.dropped,
    })
}

pub fn book(bytes: &[u8]) -> Result<BookFile, CliError> {
    let file = parse_book(bytes, usize::MAX).map_err(data)?;
    if file.snapshots.is_empty() {
        return Err(CliError::Data("book file has no snapshots".into()));
    }
    Ok(file)
}

/// Keeps snapshots whose local time of day lies in the session and returns
/// the session hours used.
pub fn book_in_session(file: &mut BookFile, hours: Option<SessionHours>) -> Result<SessionHours, CliError> {
    let hours = hours_or_default(hours, file.snapshots.iter().map(|s| s.timestamp_ns))?;
    let (open, close) = (hours.open, hours.close);
    file.snapshots.retain(|s| {
        let local = hours.timezone.timestamp_nanos(s.timestamp_ns).time();
        let local = local.with_nanosecond(0).unwrap_or(local);
        (open..=close).contains(&local)
    });
    if file.snapshots.is_empty() {
        return Err(CliError::Data("no snapshots inside the session hours".into()));
    }
    Ok(hours)
}

use chrono::TimeZone;

/// A RegularSeries CSV, or a tick CSV resampled onto `interval_s` grids.
pub fn regular_series(bytes: &[u8], interval_s: u64, hours: Option<SessionHours>) -> Result<RegularSeries, CliError> {
    if bytes.starts_with(b"# tick_size") {
        let t = ticks(bytes, hours)?;
        let interval = i64::try_from(interval_s)
            .ok()
            .and_then(|s| s.checked_mul(1_000_000_000))
            .filter(|&v| v > 0)
            .ok_or_else(|| CliError::Usage("--interval must be positive".into()))?;
        tickphys::market_data::resample(&t.days, interval).map_err(data)
    } else {
        RegularSeries::from_csv(bytes).map_err(data)
    }
}
