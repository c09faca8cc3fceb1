use super::{DaySlice, MarketDataError, RegularSeries, Result};

/// Samples each day on a grid `open + k·interval`, `k = 0..=⌊length/interval⌋`,
/// using the last price at or before each grid instant. Grid points before
/// the day's first tick take that first price. Values are in ticks.
pub fn resample(days: &[DaySlice], interval_ns: i64) -> Result<RegularSeries> {
    if interval_ns <= 0 {
        return Err(MarketDataError::InvalidSeries("interval must be positive".into()));
    }
    if days.is_empty() {
        return Err(MarketDataError::InvalidSeries("no days to resample".into()));
    }
    let mut values = Vec::new();
    let mut session_boundaries = Vec::with_capacity(days.len());
    let mut session_starts_ns = Vec::with_capacity(days.len());

    for day in days {
        let first = day
            .events
            .first()
            .ok_or(MarketDataError::EmptyDay(day.session.date))?;
        let open = day.session.open_ns();
        let points = (day.session.length_ns() / interval_ns) as usize + 1;
        session_boundaries.push(values.len());
        session_starts_ns.push(open);

        let mut cursor = 0usize;
        let mut current = first.price;
        for k in 0..points {
            let t = open + k as i64 * interval_ns;
            while cursor < day.events.len() && day.events[cursor].timestamp_ns <= t {
                current = day.events[cursor].price;
                cursor += 1;
            }
            values.push(current as f64);
        }
    }

    Ok(RegularSeries {
        start_ns: session_starts_ns[0],
        interval_ns,
        values,
        session_boundaries,
        session_starts_ns,
    })
}
