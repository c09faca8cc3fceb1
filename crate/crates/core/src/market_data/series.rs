use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::BufRead;

use super::{malformed, MarketDataError, Result};

/// Evenly sampled real-valued series, possibly spanning several sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularSeries {
    pub start_ns: i64,
    pub interval_ns: i64,
    pub values: Vec<f64>,
    /// Index of each session's first grid point (always starts with 0).
    pub session_boundaries: Vec<usize>,
    /// Wall-clock instant of each session's first grid point.
    pub session_starts_ns: Vec<i64>,
}

impl RegularSeries {
    /// Single-session series starting at 0 with the given spacing.
    pub fn from_values(values: Vec<f64>, interval_ns: i64) -> Result<Self> {
        let s = Self {
            start_ns: 0,
            interval_ns,
            values,
            session_boundaries: vec![0],
            session_starts_ns: vec![0],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(MarketDataError::InvalidSeries("no values".into()));
        }
        if self.interval_ns <= 0 {
            return Err(MarketDataError::InvalidSeries("interval must be positive".into()));
        }
        if self.session_boundaries.len() != self.session_starts_ns.len() {
            return Err(MarketDataError::InvalidSeries("boundary/start length mismatch".into()));
        }
        if self.session_boundaries.windows(2).any(|w| w[1] <= w[0])
            || self.session_boundaries.iter().any(|&b| b >= self.values.len())
        {
            return Err(MarketDataError::InvalidSeries(
                "session boundaries must be strictly increasing and in range".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> i64 {
        let day = self.session_boundaries.partition_point(|&b| b <= i);
        if day == 0 {
            return self.start_ns + i as i64 * self.interval_ns;
        }
        self.session_starts_ns[day - 1] + (i - self.session_boundaries[day - 1]) as i64 * self.interval_ns
    }

    /// True when grid indices `[lo, hi)` straddle a session boundary.
    pub fn spans_boundary(&self, lo: usize, hi: usize) -> bool {
        self.session_boundaries.iter().any(|&b| b > lo && b < hi)
    }

    /// CSV `timestamp_ns,price` with a `# session_boundaries=i1;i2;...` footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp_ns,price\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.timestamp(i), v);
        }
        let b: Vec<String> = self.session_boundaries.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "# session_boundaries={}", b.join(";"));
        out
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut boundaries: Option<Vec<usize>> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let row = line.trim();
            if row.is_empty() || row == "timestamp_ns,price" {
                continue;
            }
            if let Some(rest) = row.strip_prefix("# session_boundaries=") {
                let parsed: std::result::Result<Vec<usize>, _> =
                    rest.split(';').filter(|s| !s.is_empty()).map(str::parse).collect();
                boundaries = Some(parsed.map_err(|_| malformed(line_no, "bad session_boundaries"))?);
                continue;
            }
            if row.starts_with('#') {
                continue;
            }
            let (t, v) = row.split_once(',').ok_or_else(|| malformed(line_no, "expected 2 fields"))?;
            times.push(t.trim().parse::<i64>().map_err(|_| malformed(line_no, "bad timestamp"))?);
            values.push(v.trim().parse::<f64>().map_err(|_| malformed(line_no, "bad value"))?);
        }
        if values.is_empty() {
            return Err(MarketDataError::InvalidSeries("no values".into()));
        }
        let session_boundaries = boundaries.unwrap_or_else(|| vec![0]);
        let interval_ns = if values.len() > 1 {
            times[1] - times[0]
        } else {
            1
        };
        let session_starts_ns = session_boundaries
            .iter()
            .map(|&b| times.get(b).copied().unwrap_or_default())
            .collect();
        let s = Self {
            start_ns: times[0],
            interval_ns: interval_ns.max(1),
            values,
            session_boundaries,
            session_starts_ns,
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = RegularSeries {
            start_ns: 1_000,
            interval_ns: 10,
            values: vec![1.0, 2.5, -3.25, 4.0, 5.0],
            session_boundaries: vec![0, 3],
            session_starts_ns: vec![1_000, 9_000],
        };
        let text = s.to_csv();
        assert!(text.ends_with("# session_boundaries=0;3\n"));
        assert!(text.contains("9010,5\n"));
        let back = RegularSeries::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn validation() {
        assert!(RegularSeries::from_values(vec![], 1).is_err());
        let mut s = RegularSeries::from_values(vec![1.0, 2.0], 1).unwrap();
        s.session_boundaries = vec![0, 2];
        s.session_starts_ns = vec![0, 5];
        assert!(s.validate().is_err());
    }

    #[test]
    fn boundary_spanning() {
        let s = RegularSeries {
            start_ns: 0,
            interval_ns: 1,
            values: vec![0.0; 10],
            session_boundaries: vec![0, 5],
            session_starts_ns: vec![0, 100],
        };
        assert!(s.spans_boundary(2, 8));
        assert!(!s.spans_boundary(5, 10));
        assert!(!s.spans_boundary(0, 5));
    }
}
