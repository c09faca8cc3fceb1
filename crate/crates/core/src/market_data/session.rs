use chrono::{NaiveDate, NaiveTime, TimeZone};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{MarketDataError, Result, TickEvent};

/// Daily trading hours in a named time zone. The interval is closed:
/// an event exactly at `close` belongs to the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHours {
    pub open: NaiveTime,
    pub close: NaiveTime,
    pub timezone: Tz,
}

impl SessionHours {
    pub fn new(open: NaiveTime, close: NaiveTime, timezone: Tz) -> Result<Self> {
        if open >= close {
            return Err(MarketDataError::InvalidSession(format!(
                "open {open} must precede close {close}"
            )));
        }
        Ok(Self { open, close, timezone })
    }

    /// The whole UTC day, for synthetic data.
    pub fn all_day_utc() -> Self {
        Self {
            open: NaiveTime::MIN,
            close: NaiveTime::from_hms_nano_opt(23, 59, 59, 999_999_999).unwrap(),
            timezone: Tz::UTC,
        }
    }
}

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub date: NaiveDate,
    pub hours: SessionHours,
}

impl Session {
    fn instant_ns(&self, t: NaiveTime) -> i64 {
        let local = self.date.and_time(t);
        let dt = self
            .hours
            .timezone
            .from_local_datetime(&local)
            .earliest()
            // local time skipped by a DST jump: fall back to the UTC reading
            .unwrap_or_else(|| self.hours.timezone.from_utc_datetime(&local));
        dt.timestamp_nanos_opt().unwrap_or(i64::MAX)
    }

    pub fn open_ns(&self) -> i64 {
        self.instant_ns(self.hours.open)
    }

    pub fn close_ns(&self) -> i64 {
        self.instant_ns(self.hours.close)
    }

    pub fn length_ns(&self) -> i64 {
        self.close_ns() - self.open_ns()
    }
}

/// Events of one trading day, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySlice {
    pub session: Session,
    pub events: Vec<TickEvent>,
}

impl DaySlice {
    /// A synthetic single-day slice: one event per price, `spacing_ns` apart,
    /// starting at the open of 2000-01-03 UTC.
    pub fn from_prices(prices: &[i64], spacing_ns: i64) -> Self {
        let session = Session {
            date: NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(),
            hours: SessionHours::all_day_utc(),
        };
        let open = session.open_ns();
        let events = prices
            .iter()
            .enumerate()
            .map(|(i, &price)| TickEvent {
                timestamp_ns: open + i as i64 * spacing_ns,
                price,
                kind: super::TickKind::Trade,
                volume: 1,
            })
            .collect();
        Self { session, events }
    }

    pub fn prices(&self) -> Vec<i64> {
        self.events.iter().map(|e| e.price).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sessionized {
    pub days: Vec<DaySlice>,
    /// Events outside every session window.
    pub dropped: usize,
}

/// Splits events into per-day slices by local date and keeps only those
/// whose local time of day lies in `[open, close]`.
pub fn sessionize(events: &[TickEvent], hours: &SessionHours) -> Sessionized {
    let mut by_day: BTreeMap<NaiveDate, Vec<TickEvent>> = BTreeMap::new();
    let mut dropped = 0;
    for e in events {
        let local = hours.timezone.timestamp_nanos(e.timestamp_ns).naive_local();
        let t = local.time();
        if t >= hours.open && t <= hours.close {
            by_day.entry(local.date()).or_default().push(*e);
        } else {
            dropped += 1;
        }
    }
    let days = by_day
        .into_iter()
        .map(|(date, events)| DaySlice {
            session: Session { date, hours: *hours },
            events,
        })
        .collect();
    Sessionized { days, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::TickKind;
    use chrono::{NaiveDateTime, Utc};

    fn at(s: &str, price: i64) -> TickEvent {
        let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").unwrap();
        TickEvent {
            timestamp_ns: Utc.from_utc_datetime(&dt).timestamp_nanos_opt().unwrap(),
            price,
            kind: TickKind::Trade,
            volume: 1,
        }
    }

    fn hours() -> SessionHours {
        SessionHours::new(
            NaiveTime::from_hms_opt(9, 0, 0).unwrap(),
            NaiveTime::from_hms_opt(17, 0, 0).unwrap(),
            Tz::UTC,
        )
        .unwrap()
    }

    #[test]
    fn one_day_nothing_dropped() {
        let ev = vec![at("2004-07-20 09:00:00", 1), at("2004-07-20 12:00:00", 2)];
        let s = sessionize(&ev, &hours());
        assert_eq!(s.days.len(), 1);
        assert_eq!(s.dropped, 0);
    }

    #[test]
    fn two_days_and_drops() {
        let ev = vec![
            at("2004-07-20 08:59:59", 0),
            at("2004-07-20 10:00:00", 1),
            at("2004-07-21 10:00:00", 2),
            at("2004-07-21 17:00:01", 3),
        ];
        let s = sessionize(&ev, &hours());
        assert_eq!(s.days.len(), 2);
        assert_eq!(s.dropped, 2);
        assert!(s.days[0].session.date < s.days[1].session.date);
    }

    #[test]
    fn close_is_inclusive() {
        let s = sessionize(&[at("2004-07-20 17:00:00", 1)], &hours());
        assert_eq!(s.days.len(), 1);
        assert_eq!(s.dropped, 0);
    }

    #[test]
    fn named_zone() {
        let berlin = SessionHours::new(
            NaiveTime::from_hms_opt(8, 0, 0).unwrap(),
            NaiveTime::from_hms_opt(22, 0, 0).unwrap(),
            chrono_tz::Europe::Berlin,
        )
        .unwrap();
        // 07:30 UTC in July is 09:30 in Berlin
        let s = sessionize(&[at("2004-07-20 07:30:00", 1)], &berlin);
        assert_eq!(s.dropped, 0);
        assert_eq!(s.days[0].session.open_ns() + 5_400_000_000_000, s.days[0].events[0].timestamp_ns);
    }

    #[test]
    fn invalid_hours() {
        let t = NaiveTime::from_hms_opt(9, 0, 0).unwrap();
        assert!(SessionHours::new(t, t, Tz::UTC).is_err());
    }
}
