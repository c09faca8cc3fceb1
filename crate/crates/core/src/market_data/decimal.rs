use std::fmt;
use std::str::FromStr;

/// Exact decimal tick size, `mantissa · 10^{-scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickSize {
    mantissa: i128,
    scale: u32,
}

/// Exact decimal parsed from CSV text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Decimal {
    mantissa: i128,
    scale: u32,
}

impl FromStr for Decimal {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int, frac) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(());
        }
        let mut mantissa: i128 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            mantissa = mantissa.checked_mul(10).ok_or(())?.checked_add((b - b'0') as i128).ok_or(())?;
        }
        Ok(Decimal {
            mantissa: if neg { -mantissa } else { mantissa },
            scale: frac.len() as u32,
        })
    }
}

impl TickSize {
    pub fn parse(s: &str) -> Option<TickSize> {
        let d: Decimal = s.parse().ok()?;
        (d.mantissa > 0).then_some(TickSize {
            mantissa: d.mantissa,
            scale: d.scale,
        })
    }

    pub fn as_f64(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Exact number of ticks in `price`, or `None` if it is not a multiple.
    pub(crate) fn ticks_of(&self, price: Decimal) -> Option<i64> {
        let s = self.scale.max(price.scale);
        let p = price.mantissa.checked_mul(10i128.pow(s - price.scale))?;
        let t = self.mantissa.checked_mul(10i128.pow(s - self.scale))?;
        (p % t == 0).then(|| i64::try_from(p / t).ok()).flatten()
    }

    /// Canonical decimal text for `ticks · tick_size`, printed with exactly
    /// `scale` fractional digits (at least one).
    pub fn format_price(&self, ticks: i64) -> String {
        let digits = self.scale.max(1);
        let v = ticks as i128 * self.mantissa * 10i128.pow(digits - self.scale);
        let sign = if v < 0 { "-" } else { "" };
        let v = v.unsigned_abs();
        let pow = 10u128.pow(digits);
        format!("{sign}{}.{:0width$}", v / pow, v % pow, width = digits as usize)
    }
}

impl fmt::Display for TickSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pow = 10i128.pow(self.scale);
        if self.scale == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}.{:0width$}", self.mantissa / pow, self.mantissa % pow, width = self.scale as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division() {
        let t = TickSize::parse("0.5").unwrap();
        assert_eq!(t.ticks_of("100.5".parse().unwrap()), Some(201));
        assert_eq!(t.ticks_of("101.0".parse().unwrap()), Some(202));
        assert_eq!(t.ticks_of("101".parse().unwrap()), Some(202));
        assert_eq!(t.ticks_of("100.3".parse().unwrap()), None);
        let t = TickSize::parse("0.25").unwrap();
        assert_eq!(t.ticks_of("-0.75".parse().unwrap()), Some(-3));
    }

    #[test]
    fn formatting() {
        let t = TickSize::parse("0.5").unwrap();
        assert_eq!(t.format_price(201), "100.5");
        assert_eq!(t.format_price(202), "101.0");
        assert_eq!(t.format_price(-3), "-1.5");
        assert_eq!(t.to_string(), "0.5");
        let t = TickSize::parse("1").unwrap();
        assert_eq!(t.format_price(7), "7.0");
        assert_eq!(TickSize::parse("0.01").unwrap().to_string(), "0.01");
    }

    #[test]
    fn rejects_garbage() {
        assert!(TickSize::parse("0").is_none());
        assert!(TickSize::parse("-1").is_none());
        assert!(TickSize::parse("abc").is_none());
        assert!("1.2.3".parse::<Decimal>().is_err());
        assert!(".".parse::<Decimal>().is_err());
    }
}
