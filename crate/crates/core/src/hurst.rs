//! Detrended fluctuation analysis (DFA), global and sliding-window Hurst
//! exponents, and scale-dependence summaries.
//!
//! [`dfa_fluctuation`] takes a stationary signal (e.g. returns) and
//! integrates it into a profile. [`hurst_exponent`] and [`local_hurst`] take
//! price levels: for a detrending order of at least one, the mean-subtracted
//! price path *is* the profile of its increments up to a linear term, so it
//! is used directly and a random-walk price yields H = 1/2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::market_data::RegularSeries;
use crate::numerics::{linfit, mean, NumericsError, UniformHistogram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HurstError {
    #[error("series of length {len} is too short: need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("degenerate (constant) series")]
    DegenerateSeries,
    #[error("window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("invalid DFA configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, HurstError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaConfig {
    /// Degree of the per-box detrending polynomial.
    pub poly_order: usize,
    /// Strictly increasing box sizes.
    pub box_sizes: Vec<usize>,
    /// Boxes required at the largest size.
    pub min_boxes: usize,
}

impl DfaConfig {
    /// DFA-1 with `count` sizes geometrically spaced over `[min, max]`.
    pub fn geometric(min: usize, max: usize, count: usize) -> Self {
        Self {
            poly_order: 1,
            box_sizes: geometric_sizes(min, max, count),
            min_boxes: 4,
        }
    }

    /// Default schedule for a window of `len` points: 20 sizes from 8 to len/4.
    pub fn for_window(len: usize) -> Self {
        Self::geometric(8, len / 4, 20)
    }

    pub fn max_box(&self) -> usize {
        self.box_sizes.last().copied().unwrap_or(0)
    }

    pub fn min_len(&self) -> usize {
        self.max_box() * self.min_boxes
    }

    pub fn validate(&self) -> Result<()> {
        if self.poly_order == 0 {
            return Err(HurstError::InvalidConfig("poly_order must be positive".into()));
        }
        if self.box_sizes.len() < 3 {
            return Err(HurstError::InvalidConfig("need at least three box sizes".into()));
        }
        if self.box_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HurstError::InvalidConfig("box sizes must be strictly increasing".into()));
        }
        if self.box_sizes[0] < self.poly_order + 2 {
            return Err(HurstError::InvalidConfig(format!(
                "smallest box {} must be at least poly_order + 2 = {}",
                self.box_sizes[0],
                self.poly_order + 2
            )));
        }
        if self.min_boxes < 4 {
            return Err(HurstError::InvalidConfig("min_boxes must be at least 4".into()));
        }
        Ok(())
    }
}

/// Geometrically spaced integers over `[min, max]`, rounded and deduplicated.
pub fn geometric_sizes(min: usize, max: usize, count: usize) -> Vec<usize> {
    if count < 2 || max <= min {
        return vec![min.max(1)];
    }
    let ratio = (max as f64 / min as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count)
        .map(|i| (min as f64 * ratio.powi(i as i32)).round() as usize)
        .collect();
    *out.last_mut().unwrap() = max;
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub h: f64,
    /// Standard error of the log-log regression slope.
    pub stderr: f64,
    pub n_points: usize,
}

/// Local Hurst exponents; `times[i]` is the (exclusive) right edge of the
/// window that produced `estimates[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSeries {
    pub times: Vec<usize>,
    pub estimates: Vec<HurstEstimate>,
    pub window: usize,
    pub shift: usize,
    /// Windows straddling a session boundary.
    pub spans_boundary: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstSummary {
    pub mean: f64,
    pub sd: f64,
    pub n_windows: usize,
}

impl HurstSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.h).collect()
    }

    pub fn summary(&self) -> HurstSummary {
        let h = self.values();
        let m = mean(&h);
        let sd = if h.len() > 1 {
            (h.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (h.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        HurstSummary {
            mean: m,
            sd,
            n_windows: h.len(),
        }
    }

    /// CSV `t,h,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,h,stderr\n");
        for (t, e) in self.times.iter().zip(&self.estimates) {
            let _ = writeln!(out, "{},{},{}", t, e.h, e.stderr);
        }
        out
    }
}

/// Fluctuation function `F(n)` of a stationary signal.
pub fn dfa_fluctuation(series: &[f64], config: &DfaConfig) -> Result<Vec<(usize, f64)>> {
    config.validate()?;
    check_length(series.len(), config)?;
    if is_constant(series) {
        return Err(HurstError::DegenerateSeries);
    }
    let m = mean(series);
    let profile: Vec<f64> = series
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x - m;
            Some(*acc)
        })
        .collect();
    Ok(profile_fluctuation(&profile, config))
}

/// Hurst exponent of a price-level series: OLS slope of log₂F(n) on log₂n.
pub fn hurst_exponent(series: &[f64], config: &DfaConfig) -> Result<HurstEstimate> {
    config.validate()?;
    estimate_unchecked(series, config)
}

fn estimate_unchecked(series: &[f64], config: &DfaConfig) -> Result<HurstEstimate> {
    check_length(series.len(), config)?;
    if is_constant(series) {
        return Err(HurstError::DegenerateSeries);
    }
    let m = mean(series);
    let profile: Vec<f64> = series.iter().map(|x| x - m).collect();
    let fluct = profile_fluctuation(&profile, config);
    // a polynomial path of degree ≤ poly_order detrends to rounding noise
    let scale = (profile.iter().map(|v| v * v).sum::<f64>() / profile.len() as f64).sqrt();
    if fluct.iter().any(|&(_, f)| f <= 1e-10 * scale) {
        return Err(HurstError::DegenerateSeries);
    }
    slope_of(&fluct)
}

fn slope_of(fluct: &[(usize, f64)]) -> Result<HurstEstimate> {
    if fluct.iter().any(|&(_, f)| !(f > 0.0)) {
        return Err(HurstError::DegenerateSeries);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = fluct
        .iter()
        .map(|&(n, f)| ((n as f64).log2(), f.log2()))
        .unzip();
    let fit = linfit(&x, &y)?;
    Ok(HurstEstimate {
        h: fit.slope,
        stderr: fit.slope_stderr,
        n_points: x.len(),
    })
}

fn check_length(len: usize, config: &DfaConfig) -> Result<()> {
    if len < config.min_len() {
        return Err(HurstError::SeriesTooShort {
            len,
            needed: config.min_len(),
        });
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// `F(n)` for a given profile: boxes laid from the start and from the end,
/// polynomial detrending per box, RMS residual over all boxes.
pub(crate) fn profile_fluctuation(profile: &[f64], config: &DfaConfig) -> Vec<(usize, f64)> {
    if config.poly_order == 1 {
        // Removing the global least-squares line leaves every box residual
        // unchanged but shrinks the prefix sums, limiting cancellation.
        let flat = remove_line(profile);
        let sums = PrefixSums::new(&flat);
        config
            .box_sizes
            .iter()
            .map(|&n| (n, fluctuation_with(profile.len(), n, |s| sums.linear_rss(s, n))))
            .collect()
    } else {
        config
            .box_sizes
            .iter()
            .map(|&n| {
                let basis = OrthoBasis::new(n, config.poly_order);
                (n, fluctuation_with(profile.len(), n, |s| basis.rss(&profile[s..s + n])))
            })
            .collect()
    }
}

fn remove_line(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mid = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - mid) * (v - my)).sum();
    let sxx = n * (n * n - 1.0) / 12.0;
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    y.iter()
        .enumerate()
        .map(|(i, v)| v - my - slope * (i as f64 - mid))
        .collect()
}

/// Reference implementation via explicit per-box projection, any order.
#[cfg(test)]
pub(crate) fn profile_fluctuation_generic(profile: &[f64], config: &DfaConfig) -> Vec<(usize, f64)> {
    config
        .box_sizes
        .iter()
        .map(|&n| {
            let basis = OrthoBasis::new(n, config.poly_order);
            (n, fluctuation_with(profile.len(), n, |s| basis.rss(&profile[s..s + n])))
        })
        .collect()
}

fn fluctuation_with(len: usize, n: usize, rss: impl Fn(usize) -> f64) -> f64 {
    let boxes = len / n;
    let tail = len - boxes * n;
    let mut total = 0.0;
    for b in 0..boxes {
        total += rss(b * n);
        total += rss(tail + b * n);
    }
    (total / (2 * boxes * n) as f64).sqrt()
}

/// Prefix sums of y, y² and i·y for O(1) linear-fit residuals per box.
struct PrefixSums {
    y: Vec<f64>,
    yy: Vec<f64>,
    iy: Vec<f64>,
}

impl PrefixSums {
    fn new(profile: &[f64]) -> Self {
        let n = profile.len();
        let mut y = Vec::with_capacity(n + 1);
        let mut yy = Vec::with_capacity(n + 1);
        let mut iy = Vec::with_capacity(n + 1);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        y.push(a);
        yy.push(b);
        iy.push(c);
        for (i, &v) in profile.iter().enumerate() {
            a += v;
            b += v * v;
            c += i as f64 * v;
            y.push(a);
            yy.push(b);
            iy.push(c);
        }
        Self { y, yy, iy }
    }

    fn linear_rss(&self, start: usize, n: usize) -> f64 {
        let end = start + n;
        let nf = n as f64;
        let sy = self.y[end] - self.y[start];
        let syy = self.yy[end] - self.yy[start];
        let siy = self.iy[end] - self.iy[start];
        let mid = start as f64 + (nf - 1.0) / 2.0;
        let sxy = siy - mid * sy;
        let sxx = nf * (nf * nf - 1.0) / 12.0;
        let centred_yy = syy - sy * sy / nf;
        (centred_yy - sxy * sxy / sxx).max(0.0)
    }
}

/// Orthonormal polynomial basis on `n` equally spaced points.
struct OrthoBasis {
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    fn new(n: usize, order: usize) -> Self {
        let centre = (n as f64 - 1.0) / 2.0;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut v: Vec<f64> = (0..n)
                .map(|i| ((i as f64 - centre) / n as f64).powi(k as i32))
                .collect();
            // modified Gram-Schmidt, applied twice for stability
            for _ in 0..2 {
                for q in &vectors {
                    let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                    for (a, b) in v.iter_mut().zip(q) {
                        *a -= d * b;
                    }
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            vectors.push(v);
        }
        Self { vectors }
    }

    fn rss(&self, y: &[f64]) -> f64 {
        let mut r = y.to_vec();
        for q in &self.vectors {
            let d: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (a, b) in r.iter_mut().zip(q) {
                *a -= d * b;
            }
        }
        r.iter().map(|a| a * a).sum()
    }
}

/// Hurst exponents over sliding windows `[t−L, t)` for
/// `t = L, L+shift, L+2·shift, … ≤ len`.
pub fn local_hurst(series: &RegularSeries, window: usize, shift: usize, config: &DfaConfig) -> Result<HurstSeries> {
    config.validate()?;
    let len = series.len();
    if window > len {
        return Err(HurstError::WindowTooLarge { window, len });
    }
    if shift == 0 {
        return Err(HurstError::InvalidConfig("shift must be positive".into()));
    }
    check_length(window, config)?;

    let times: Vec<usize> = (window..=len).step_by(shift).collect();
    let estimates = times
        .par_iter()
        .map(|&t| estimate_unchecked(&series.values[t - window..t], config))
        .collect::<Result<Vec<_>>>()?;
    let spans_boundary = times
        .iter()
        .map(|&t| series.spans_boundary(t - window, t))
        .collect();
    Ok(HurstSeries {
        times,
        estimates,
        window,
        shift,
        spans_boundary,
    })
}

/// Equal-width density of the local exponents on `[0, 1]`.
pub fn hurst_pdf(hs: &HurstSeries, bins: usize) -> UniformHistogram {
    UniformHistogram::new(hs.values(), 0.0, 1.0, bins)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub window: usize,
    pub mean_h: f64,
    pub sd_h: f64,
    pub n_windows: usize,
}

/// Mean and spread of the local exponent for each window length. The DFA
/// configuration for each `L` comes from `config_for`.
pub fn avg_hurst_vs_scale(
    series: &RegularSeries,
    windows: &[usize],
    shift: usize,
    config_for: impl Fn(usize) -> DfaConfig,
) -> Result<Vec<ScaleRow>> {
    windows
        .iter()
        .map(|&l| {
            let hs = local_hurst(series, l, shift, &config_for(l))?;
            let s = hs.summary();
            Ok(ScaleRow {
                window: l,
                mean_h: s.mean,
                sd_h: s.sd,
                n_windows: s.n_windows,
            })
        })
        .collect()
}
