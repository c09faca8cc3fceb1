pub mod hurst;
pub mod invstat;
pub mod relax;
pub mod selftest;
pub mod synth;

use crate::error::CliError;

/// Parses `a:b` (or `a:b:c`) into numbers.
pub fn parse_range<T: std::str::FromStr>(flag: &str, s: &str, parts: usize) -> Result<Vec<T>, CliError> {
    let v: Vec<T> = s
        .split(':')
        .map(|p| p.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{flag}: cannot parse {s:?}")))?;
    if v.len() != parts {
        return Err(CliError::Usage(format!("{flag}: expected {parts} ':'-separated values, got {s:?}")));
    }
    Ok(v)
}

/// `0.1` → `0.1`, used in per-κ file names.
pub fn tag(x: f64) -> String {
    format!("{x}")
}
