//! Inverse statistics: exit (first-passage) times to a fixed price move,
//! their log-binned distribution, the four-parameter first-passage model
//! fit, the optimal horizon τ* and its power-law scaling with the target.
//!
//! Price moves are straight differences in integer ticks. Every event is an
//! entry point, so samples overlap and reported standard errors are nominal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::DaySlice;
use crate::numerics::{
    gamma_fn, gamma_p, gamma_q, linfit, log_bin_integer, minimize, Bound, LogBinnedPdf, NumericsError,
    UniformHistogram,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvStatError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least {needed} occupied bins spanning {decades} decades, got {got} spanning {span:.2}")]
    TooFewBins { needed: usize, decades: f64, got: usize, span: f64 },
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, InvStatError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveDirection {
    /// `p(t+T) − p(t) ≥ |R|`
    Up,
    /// `p(t+T) − p(t) ≤ −|R|`
    Down,
    /// Whichever of the two happens first.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clock {
    /// Elapsed events.
    TickTime,
    /// Elapsed seconds, rounded up, at least one.
    WallTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitTimeConfig {
    /// Target move in ticks; only the magnitude is used, `direction` sets the sign.
    pub target: i64,
    pub direction: MoveDirection,
    pub clock: Clock,
    pub intraday_only: bool,
}

impl ExitTimeConfig {
    pub fn up(target: i64) -> Self {
        Self {
            target,
            direction: MoveDirection::Up,
            clock: Clock::TickTime,
            intraday_only: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeSample {
    /// Index into the concatenation of all days' events.
    pub entry_index: usize,
    pub tau: u64,
    /// Seconds since the session open.
    pub entry_time_of_day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimes {
    pub samples: Vec<ExitTimeSample>,
    /// Entries without a crossing before the end of the day (or data).
    pub censored: usize,
}

impl ExitTimes {
    pub fn taus(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn entries(&self) -> usize {
        self.samples.len() + self.censored
    }
}

/// For every `t`, the first `j > t` with `prices[j] ≥ prices[t] + target`.
///
/// Right-to-left sweep keeping the strict running-maximum records of the
/// suffix on a stack; the answer is the nearest record at or above the
/// level, found by binary search. O(n log n).
pub fn first_hits_up(prices: &[i64], target: i64) -> Vec<Option<usize>> {
    let mut out = vec![None; prices.len()];
    // bottom → top: indices with strictly decreasing prices
    let mut stack: Vec<usize> = Vec::new();
    for t in (0..prices.len()).rev() {
        let level = prices[t] + target;
        let k = stack.partition_point(|&j| prices[j] >= level);
        if k > 0 {
            out[t] = Some(stack[k - 1]);
        }
        while let Some(&top) = stack.last() {
            if prices[top] <= prices[t] {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(t);
    }
    out
}

fn first_hits(prices: &[i64], target: i64, direction: MoveDirection) -> Vec<Option<usize>> {
    let negated = || prices.iter().map(|p| -p).collect::<Vec<_>>();
    match direction {
        MoveDirection::Up => first_hits_up(prices, target),
        MoveDirection::Down => first_hits_up(&negated(), target),
        MoveDirection::Both => {
            let up = first_hits_up(prices, target);
            let down = first_hits_up(&negated(), target);
            up.into_iter()
                .zip(down)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                })
                .collect()
        }
    }
}

/// Tick-time exit times of a bare price path (one segment): the τ of every
/// resolved entry in entry order, and the number censored at the end.
pub fn exit_taus(prices: &[i64], target: i64, direction: MoveDirection) -> (Vec<u64>, usize) {
    let hits = first_hits(prices, target.abs(), direction);
    let mut taus = Vec::with_capacity(hits.len());
    for (t, h) in hits.into_iter().enumerate() {
        if let Some(j) = h {
            taus.push((j - t) as u64);
        }
    }
    let censored = prices.len() - taus.len();
    (taus, censored)
}

/// Exit times for every event. Days are processed independently when
/// `intraday_only`, otherwise the days are concatenated.
pub fn exit_times(days: &[DaySlice], config: &ExitTimeConfig) -> Result<ExitTimes> {
    if config.target == 0 {
        return Err(InvStatError::InvalidConfig("target must be nonzero".into()));
    }
    let target = config.target.abs();

    struct Segment<'a> {
        offset: usize,
        events: Vec<&'a crate::market_data::TickEvent>,
        opens: Vec<i64>,
    }

    let mut segments = Vec::new();
    let mut offset = 0;
    if config.intraday_only {
        for d in days {
            let open = d.session.open_ns();
            segments.push(Segment {
                offset,
                events: d.events.iter().collect(),
                opens: vec![open; d.events.len()],
            });
            offset += d.events.len();
        }
    } else {
        let mut seg = Segment {
            offset: 0,
            events: Vec::new(),
            opens: Vec::new(),
        };
        for d in days {
            let open = d.session.open_ns();
            seg.events.extend(d.events.iter());
            seg.opens.extend(std::iter::repeat(open).take(d.events.len()));
        }
        segments.push(seg);
    }

    let per_segment: Vec<(Vec<ExitTimeSample>, usize)> = segments
        .par_iter()
        .map(|seg| {
            let prices: Vec<i64> = seg.events.iter().map(|e| e.price).collect();
            let hits = first_hits(&prices, target, config.direction);
            let mut samples = Vec::with_capacity(prices.len());
            let mut censored = 0;
            for (t, hit) in hits.into_iter().enumerate() {
                let Some(j) = hit else {
                    censored += 1;
                    continue;
                };
                let tau = match config.clock {
                    Clock::TickTime => (j - t) as u64,
                    Clock::WallTime => {
                        let dt = seg.events[j].timestamp_ns - seg.events[t].timestamp_ns;
                        ((dt as u64).div_ceil(1_000_000_000)).max(1)
                    }
                };
                samples.push(ExitTimeSample {
                    entry_index: seg.offset + t,
                    tau,
                    entry_time_of_day: (seg.events[t].timestamp_ns - seg.opens[t]) as f64 * 1e-9,
                });
            }
            (samples, censored)
        })
        .collect();

    let mut out = ExitTimes {
        samples: Vec::new(),
        censored: 0,
    };
    for (s, c) in per_segment {
        out.samples.extend(s);
        out.censored += c;
    }
    Ok(out)
}

pub const MIN_HIST_SAMPLES: usize = 100;

/// Log-binned first-passage density; censored entries count in the
/// normalisation but not in any bin.
pub fn first_passage_hist(exits: &ExitTimes, bins_per_decade: u32) -> Result<LogBinnedPdf> {
    if exits.samples.len() < MIN_HIST_SAMPLES {
        return Err(InvStatError::TooFewSamples {
            needed: MIN_HIST_SAMPLES,
            got: exits.samples.len(),
        });
    }
    Ok(log_bin_integer(&exits.taus(), bins_per_decade)?.with_censored(exits.censored as u64))
}

/// First-passage model
/// `P(τ) = ν/Γ(α/ν) · β^{2α}/(τ+τ₀)^{α+1} · exp(−(β²/(τ+τ₀))^ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageModel {
    pub alpha: f64,
    pub nu: f64,
    pub beta: f64,
    pub tau0: f64,
}

impl FirstPassageModel {
    pub fn density(&self, tau: f64) -> f64 {
        let s = tau + self.tau0;
        if !(s > 0.0) {
            return 0.0;
        }
        let b2 = self.beta * self.beta;
        let log = self.nu.ln() - gamma_fn(self.alpha / self.nu).ln() + 2.0 * self.alpha * self.beta.ln()
            - (self.alpha + 1.0) * s.ln()
            - (b2 / s).powf(self.nu);
        log.exp()
    }

    fn u(&self, tau: f64) -> f64 {
        let s = tau + self.tau0;
        if s <= 0.0 {
            f64::INFINITY
        } else {
            (self.beta * self.beta / s).powf(self.nu)
        }
    }

    /// Probability mass on `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let a = self.alpha / self.nu;
        let (ul, uh) = (self.u(lo), self.u(hi));
        // ∫_s^∞ = P(a, u(s)); use Q where P is close to one
        if uh > a + 1.0 {
            gamma_q(a, uh) - gamma_q(a, ul)
        } else {
            gamma_p(a, ul) - gamma_p(a, uh)
        }
    }

    /// Asymptotic tail exponent: `P(τ) ~ τ^{−(α+1)}`.
    pub fn tail_exponent(&self) -> f64 {
        self.alpha + 1.0
    }

    /// Mode in closed form: `τ+τ₀ = β² (ν/(α+1))^{1/ν}`, clipped at zero.
    pub fn mode(&self) -> f64 {
        let s = self.beta * self.beta * (self.nu / (self.alpha + 1.0)).powf(1.0 / self.nu);
        (s - self.tau0).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageFit {
    pub alpha: f64,
    pub nu: f64,
    pub beta: f64,
    pub tau0: f64,
    /// Count-weighted sum of squared log-density residuals.
    pub sse: f64,
}

impl FirstPassageFit {
    pub fn model(&self) -> FirstPassageModel {
        FirstPassageModel {
            alpha: self.alpha,
            nu: self.nu,
            beta: self.beta,
            tau0: self.tau0,
        }
    }
}

pub const MIN_FIT_BINS: usize = 8;
pub const MIN_FIT_DECADES: f64 = 2.0;
const RESTARTS: usize = 8;

fn occupied_span_decades(pdf: &LogBinnedPdf) -> f64 {
    let occ: Vec<usize> = pdf.occupied().collect();
    match (occ.first(), occ.last()) {
        (Some(&a), Some(&b)) => (pdf.edges[b + 1] / pdf.edges[a]).log10(),
        _ => 0.0,
    }
}

/// Count-weighted squared log residuals between empirical bin densities
/// and the model's bin-averaged density, over occupied bins, divided by the
/// mean count. The log of a bin density has variance ≈ 1/count.
pub(crate) fn log_sse(pdf: &LogBinnedPdf, bin_density: impl Fn(f64, f64) -> f64) -> f64 {
    let occupied = pdf.occupied_count().max(1) as f64;
    let mean_count = pdf.counts.iter().sum::<u64>() as f64 / occupied;
    let mut sse = 0.0;
    for i in pdf.occupied() {
        let (lo, hi) = (pdf.edges[i], pdf.edges[i + 1]);
        let model = bin_density(lo, hi);
        if !(model > 0.0) || !model.is_finite() {
            return f64::INFINITY;
        }
        let r = pdf.densities[i].ln() - model.ln();
        sse += pdf.counts[i] as f64 * r * r;
    }
    sse / mean_count
}

/// Empirical tail slope from the occupied bins above `from`.
fn tail_slope(pdf: &LogBinnedPdf, from: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = pdf
        .occupied()
        .filter(|&i| pdf.center(i) > from)
        .map(|i| (pdf.center(i).ln(), pdf.densities[i].ln()))
        .unzip();
    linfit(&x, &y).ok().map(|f| f.slope)
}

/// Least-squares fit of the first-passage model to a log-binned density.
///
/// Parameters are searched as `(ln α, ln ν, ln β, τ₀)` with `τ₀ ≥ 0`, from
/// an initial guess built from the empirical tail slope and peak, plus eight
/// deterministic jittered restarts; the lowest sse wins.
pub fn fit_first_passage(pdf: &LogBinnedPdf) -> Result<FirstPassageFit> {
    let occupied = pdf.occupied_count();
    let span = occupied_span_decades(pdf);
    if occupied < MIN_FIT_BINS || span < MIN_FIT_DECADES {
        return Err(InvStatError::TooFewBins {
            needed: MIN_FIT_BINS,
            decades: MIN_FIT_DECADES,
            got: occupied,
            span,
        });
    }

    let peak = empirical_peak(pdf);
    let alpha0 = tail_slope(pdf, 3.0 * peak.tau_star)
        .map(|s| -s - 1.0)
        .filter(|a| a.is_finite())
        .unwrap_or(0.5)
        .clamp(0.05, 5.0);
    let beta0 = (peak.tau_star * (alpha0 + 1.0)).sqrt();
    let start = [alpha0.ln(), 0.0, beta0.ln(), 0.0];

    let objective = |p: &[f64]| {
        let model = FirstPassageModel {
            alpha: p[0].exp(),
            nu: p[1].exp(),
            beta: p[2].exp(),
            tau0: p[3],
        };
        log_sse(pdf, |lo, hi| model.mass(lo, hi) / (hi - lo))
    };
    let bounds: [Bound; 4] = [
        Some((-7.0, 3.0)),
        Some((-5.0, 3.0)),
        None,
        Some((0.0, pdf.edges[pdf.n_bins()])),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut starts = vec![start.to_vec()];
    for _ in 0..RESTARTS {
        starts.push(vec![
            start[0] + rng.gen_range(-0.5..0.5),
            start[1] + rng.gen_range(-0.5..0.5),
            start[2] + rng.gen_range(-0.5..0.5),
            peak.tau_star * rng.gen_range(0.0..0.3),
        ]);
    }

    let best = starts
        .par_iter()
        .filter_map(|x0| minimize(objective, x0, &bounds).ok())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| InvStatError::FitDiverged("objective not finite at any start".into()))?;
    if !best.value.is_finite() {
        return Err(InvStatError::FitDiverged(format!("sse = {}", best.value)));
    }
    Ok(FirstPassageFit {
        alpha: best.x[0].exp(),
        nu: best.x[1].exp(),
        beta: best.x[2].exp(),
        tau0: best.x[3],
        sse: best.value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HorizonSource {
    Fit,
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub tau_star: f64,
    pub source: HorizonSource,
    /// Mode at the lower edge of the support (monotone density).
    pub boundary_mode: bool,
}

fn empirical_peak(pdf: &LogBinnedPdf) -> Horizon {
    let first = pdf.occupied().next().unwrap_or(0);
    let best = pdf
        .occupied()
        .fold(first, |b, i| if pdf.densities[i] > pdf.densities[b] { i } else { b });
    Horizon {
        tau_star: pdf.center(best),
        source: HorizonSource::Histogram,
        boundary_mode: best == first,
    }
}

/// Most probable exit time: the fitted model's mode when a fit is given,
/// else the geometric midpoint of the highest-density bin.
pub fn optimal_horizon(pdf: &LogBinnedPdf, fit: Option<&FirstPassageFit>) -> Horizon {
    match fit {
        Some(f) => {
            let tau_star = f.model().mode();
            Horizon {
                tau_star,
                source: HorizonSource::Fit,
                boundary_mode: tau_star <= 0.0,
            }
        }
        None => empirical_peak(pdf),
    }
}

/// Log-log power law `y ∝ x^{γ}` (or `x^{−γ}` for tails, see the caller).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub fit_range: (f64, f64),
}

/// Fits `ln y = γ ln x + c`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linfit(&lx, &ly)?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerLawFit {
        gamma: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        fit_range: (lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub target: i64,
    pub exits: usize,
    pub censored: usize,
    pub fit: Option<FirstPassageFit>,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonScaling {
    pub per_target: Vec<TargetResult>,
    pub fit: PowerLawFit,
}

/// τ*(R) for each target via histogram → model fit → mode, then a log-log
/// fit `τ* ~ R^γ`. If a model fit fails for a target the histogram peak is
/// used for that target.
pub fn horizon_scaling(
    days: &[DaySlice],
    targets: &[i64],
    config: &ExitTimeConfig,
    bins_per_decade: u32,
) -> Result<HorizonScaling> {
    if targets.len() < 3 {
        return Err(InvStatError::InvalidConfig("need at least three targets".into()));
    }
    let mut per_target = Vec::with_capacity(targets.len());
    for &r in targets {
        let cfg = ExitTimeConfig { target: r, ..*config };
        let exits = exit_times(days, &cfg)?;
        let pdf = first_passage_hist(&exits, bins_per_decade)?;
        let fit = fit_first_passage(&pdf).ok();
        let horizon = optimal_horizon(&pdf, fit.as_ref());
        per_target.push(TargetResult {
            target: r,
            exits: exits.samples.len(),
            censored: exits.censored,
            fit,
            horizon,
        });
    }
    let rs: Vec<f64> = per_target.iter().map(|t| t.target.unsigned_abs() as f64).collect();
    let taus: Vec<f64> = per_target.iter().map(|t| t.horizon.tau_star).collect();
    let fit = power_law_fit(&rs, &taus)?;
    Ok(HorizonScaling { per_target, fit })
}

/// Density over time of day (seconds since open) of the entries that
/// reached the target.
pub fn entry_time_distribution(samples: &[ExitTimeSample], bin_width_s: f64, session_length_s: f64) -> UniformHistogram {
    let bins = (session_length_s / bin_width_s).ceil().max(1.0) as usize;
    UniformHistogram::new(
        samples.iter().map(|s| s.entry_time_of_day),
        0.0,
        bins as f64 * bin_width_s,
        bins,
    )
}

/// Exact first-passage law of the symmetric ±1 walk to level +1:
/// `P(τ = 2k−1) = C(2k−1, k) / ((2k−1)·2^{2k−1})`, zero for even τ.
pub fn simple_walk_first_passage(tau: u64) -> f64 {
    if tau % 2 == 0 {
        return 0.0;
    }
    let n = tau;
    let k = tau.div_ceil(2);
    // C(n, k) / 2^n via logs
    let log_binom = crate::numerics::ln_gamma(n as f64 + 1.0)
        - crate::numerics::ln_gamma(k as f64 + 1.0)
        - crate::numerics::ln_gamma((n - k) as f64 + 1.0);
    (log_binom - n as f64 * std::f64::consts::LN_2).exp() / n as f64
}
