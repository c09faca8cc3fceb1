//! Order-book imbalance and its relaxation: normalised volume imbalance
//! Σ̂(t), entries where |Σ̂| crosses a threshold κ upwards, the time until
//! Σ̂ returns to zero or changes sign, and stretched-exponential / power-law
//! fits to the distribution of those times.

use chrono::Offset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invstat::{PowerLawFit, MIN_FIT_BINS};
use crate::market_data::{BookSnapshot, SessionHours};
use crate::numerics::{gamma_fn, gamma_p, gamma_q, linfit, log_bin_integer, minimize, LinFit, LogBinnedPdf, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("snapshot {index}: both sides empty within depth {depth}")]
    EmptySide { index: usize, depth: usize },
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("need at least {needed} occupied bins, got {got}")]
    TooFewBins { needed: usize, got: usize },
    #[error("no samples to histogram")]
    NoSamples,
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, RelaxError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSeries {
    pub timestamps: Vec<i64>,
    /// `(bid − ask)/(bid + ask)` volume within `depth_used` levels.
    pub sigma_hat: Vec<f64>,
    /// Unnormalised `bid − ask` volume.
    pub sigma_raw: Vec<i64>,
    pub cumulative_trades: Vec<u64>,
    pub depth_used: usize,
    /// First index of every trading session, starting with 0.
    pub session_starts: Vec<usize>,
}

impl ImbalanceSeries {
    pub fn len(&self) -> usize {
        self.sigma_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_hat.is_empty()
    }

    /// Builds a series straight from Σ̂ values (one trade per step), mainly
    /// for synthetic input.
    pub fn from_sigma_hat(sigma_hat: Vec<f64>) -> Self {
        let n = sigma_hat.len();
        Self {
            timestamps: (0..n as i64).collect(),
            sigma_raw: vec![0; n],
            cumulative_trades: (0..n as u64).collect(),
            depth_used: 1,
            session_starts: vec![0],
            sigma_hat,
        }
    }

    /// Marks a new session wherever the local calendar date changes.
    pub fn split_sessions(&mut self, hours: &SessionHours) {
        let mut starts = vec![0];
        let date = |ns: i64| {
            let utc = chrono::DateTime::from_timestamp_nanos(ns).naive_utc();
            let off = hours.timezone.offset_from_utc_datetime(&utc).fix();
            (utc + off).date()
        };
        for i in 1..self.timestamps.len() {
            if date(self.timestamps[i]) != date(self.timestamps[i - 1]) {
                starts.push(i);
            }
        }
        self.session_starts = starts;
    }

    /// Exclusive end of the session containing index `i`.
    fn session_end(&self, i: usize) -> usize {
        let k = self.session_starts.partition_point(|&s| s <= i);
        self.session_starts.get(k).copied().unwrap_or(self.len())
    }

    fn is_session_start(&self, i: usize) -> bool {
        self.session_starts.binary_search(&i).is_ok()
    }
}

use chrono::TimeZone;

/// Normalised volume imbalance of each snapshot over its first `depth`
/// levels per side.
pub fn imbalance_series(snapshots: &[BookSnapshot], depth: usize) -> Result<ImbalanceSeries> {
    if depth == 0 {
        return Err(RelaxError::InvalidDepth);
    }
    let n = snapshots.len();
    let mut out = ImbalanceSeries {
        timestamps: Vec::with_capacity(n),
        sigma_hat: Vec::with_capacity(n),
        sigma_raw: Vec::with_capacity(n),
        cumulative_trades: Vec::with_capacity(n),
        depth_used: depth,
        session_starts: vec![0],
    };
    let mut trades = 0u64;
    for (i, s) in snapshots.iter().enumerate() {
        let (b, a) = (s.bid_volume(depth), s.ask_volume(depth));
        if a + b == 0 {
            return Err(RelaxError::EmptySide { index: i, depth });
        }
        let raw = b as i64 - a as i64;
        trades += s.trade_count_delta;
        out.timestamps.push(s.timestamp_ns);
        out.sigma_hat.push(raw as f64 / (a + b) as f64);
        out.sigma_raw.push(raw);
        out.cumulative_trades.push(trades);
    }
    Ok(out)
}

/// Indices where |Σ̂| crosses κ strictly upwards. A crossing between the
/// last snapshot of one session and the first of the next is ignored.
pub fn entry_times(series: &ImbalanceSeries, kappa: f64) -> Vec<usize> {
    let a: Vec<f64> = series.sigma_hat.iter().map(|s| s.abs()).collect();
    (1..a.len())
        .filter(|&t| (a[t] - kappa) * (a[t - 1] - kappa) < 0.0 && a[t] > a[t - 1] && !series.is_session_start(t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSample {
    pub entry_index: usize,
    /// Snapshots until Σ̂ reaches zero or flips sign. For censored samples a
    /// lower bound: the number of snapshots left in the session.
    pub tau_ticks: u64,
    pub tau_trades: u64,
    pub kappa: f64,
    pub censored: bool,
}

/// For every index, the next index with Σ̂ ≤ 0 and the next with Σ̂ ≥ 0.
fn next_sign_changes(sigma: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = sigma.len();
    let (mut nonpos, mut nonneg) = (vec![n; n], vec![n; n]);
    let (mut np, mut nn) = (n, n);
    for i in (0..n).rev() {
        nonpos[i] = np;
        nonneg[i] = nn;
        if sigma[i] <= 0.0 {
            np = i;
        }
        if sigma[i] >= 0.0 {
            nn = i;
        }
    }
    (nonpos, nonneg)
}

/// Relaxation time of each entry: the first later snapshot in the same
/// session where Σ̂ is zero or has the opposite sign.
pub fn relaxation_times(series: &ImbalanceSeries, entries: &[usize], kappa: f64) -> Vec<RelaxationSample> {
    let (nonpos, nonneg) = next_sign_changes(&series.sigma_hat);
    let cum = &series.cumulative_trades;
    entries
        .iter()
        .map(|&e| {
            let end = series.session_end(e);
            let hit = if series.sigma_hat[e] > 0.0 { nonpos[e] } else { nonneg[e] };
            if hit < end {
                RelaxationSample {
                    entry_index: e,
                    tau_ticks: (hit - e) as u64,
                    tau_trades: cum[hit] - cum[e],
                    kappa,
                    censored: false,
                }
            } else {
                RelaxationSample {
                    entry_index: e,
                    tau_ticks: (end - e) as u64,
                    tau_trades: cum[end - 1] - cum[e],
                    kappa,
                    censored: true,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxClock {
    Ticks,
    Trades,
}

impl RelaxSample for RelaxationSample {
    fn tau(&self, clock: RelaxClock) -> u64 {
        match clock {
            RelaxClock::Ticks => self.tau_ticks,
            RelaxClock::Trades => self.tau_trades,
        }
    }
}

trait RelaxSample {
    fn tau(&self, clock: RelaxClock) -> u64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationHist {
    pub pdf: LogBinnedPdf,
    pub censored: usize,
    /// Resolved in zero trades; cannot be placed on a log axis.
    pub zero_trades: usize,
}

/// Log-binned pdf of uncensored relaxation times. Censored samples are
/// counted but not binned; zero trade-time samples are dropped and counted.
pub fn relaxation_hist(samples: &[RelaxationSample], clock: RelaxClock, bins_per_decade: u32) -> Result<RelaxationHist> {
    let censored = samples.iter().filter(|s| s.censored).count();
    let taus: Vec<u64> = samples.iter().filter(|s| !s.censored).map(|s| s.tau(clock)).collect();
    let positive: Vec<u64> = taus.iter().copied().filter(|&t| t > 0).collect();
    if positive.is_empty() {
        return Err(RelaxError::NoSamples);
    }
    Ok(RelaxationHist {
        pdf: log_bin_integer(&positive, bins_per_decade)?,
        censored,
        zero_trades: taus.len() - positive.len(),
    })
}

/// Normalised stretched exponential `α/(τ̃ Γ(1/α)) · exp(−(τ/τ̃)^α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchedExpFit {
    pub tau_tilde: f64,
    pub alpha: f64,
    pub sse: f64,
}

impl StretchedExpFit {
    pub fn density(&self, tau: f64) -> f64 {
        let (t, a) = (self.tau_tilde, self.alpha);
        a / (t * gamma_fn(1.0 / a)) * (-(tau / t).powf(a)).exp()
    }

    /// Probability mass on `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let s = 1.0 / self.alpha;
        let (xl, xh) = ((lo / self.tau_tilde).powf(self.alpha), (hi / self.tau_tilde).powf(self.alpha));
        if xl > s + 1.0 {
            gamma_q(s, xl) - gamma_q(s, xh)
        } else {
            gamma_p(s, xh) - gamma_p(s, xl)
        }
    }
}

const ALPHA_FLOOR: f64 = 1e-3;

/// Fit of the normalised stretched exponential to a log-binned pdf
/// (count-weighted log residuals, bin-averaged model, α ∈ (0, 1]).
pub fn fit_stretched_exp(pdf: &LogBinnedPdf) -> Result<StretchedExpFit> {
    let occupied = pdf.occupied_count();
    if occupied < MIN_FIT_BINS {
        return Err(RelaxError::TooFewBins {
            needed: MIN_FIT_BINS,
            got: occupied,
        });
    }
    // count-weighted geometric mean of the bin centres as the scale guess
    let (mut lsum, mut w) = (0.0, 0.0);
    for i in pdf.occupied() {
        lsum += pdf.counts[i] as f64 * pdf.center(i).ln();
        w += pdf.counts[i] as f64;
    }
    let scale = lsum / w;

    let objective = |p: &[f64]| {
        let m = StretchedExpFit {
            tau_tilde: p[0].exp(),
            alpha: p[1],
            sse: 0.0,
        };
        crate::invstat::log_sse(pdf, |lo, hi| m.mass(lo, hi) / (hi - lo))
    };
    let bounds = [None, Some((ALPHA_FLOOR, 1.0))];
    let starts: Vec<[f64; 2]> = [0.3, 0.6, 0.9]
        .iter()
        .flat_map(|&a| [-1.0, 0.0, 1.0].map(|d| [scale + d, a]))
        .collect();
    let best = starts
        .par_iter()
        .filter_map(|x0| minimize(objective, x0, &bounds).ok())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| RelaxError::FitDiverged("objective not finite at any start".into()))?;
    if !best.value.is_finite() {
        return Err(RelaxError::FitDiverged(format!("sse = {}", best.value)));
    }
    Ok(StretchedExpFit {
        tau_tilde: best.x[0].exp(),
        alpha: best.x[1],
        sse: best.value,
    })
}

pub const MIN_TAIL_BINS: usize = 5;

/// `P(τ) ∝ τ^{−γ}` by least squares of log density on log τ over the
/// occupied bins whose centre lies in `fit_range`.
pub fn fit_tail_power_law(pdf: &LogBinnedPdf, fit_range: (f64, f64)) -> Result<PowerLawFit> {
    let bins: Vec<usize> = pdf
        .occupied()
        .filter(|&i| (fit_range.0..=fit_range.1).contains(&pdf.center(i)))
        .collect();
    if bins.len() < MIN_TAIL_BINS {
        return Err(RelaxError::TooFewBins {
            needed: MIN_TAIL_BINS,
            got: bins.len(),
        });
    }
    let x: Vec<f64> = bins.iter().map(|&i| pdf.center(i)).collect();
    let y: Vec<f64> = bins.iter().map(|&i| pdf.densities[i]).collect();
    let fit = crate::invstat::power_law_fit(&x, &y).map_err(|e| RelaxError::FitDiverged(e.to_string()))?;
    Ok(PowerLawFit {
        gamma: -fit.gamma,
        fit_range,
        ..fit
    })
}

/// `⟨τ⟩ = (τ̃/α) Γ(1/α)`.
pub fn mean_relaxation_from_fit(fit: &StretchedExpFit) -> f64 {
    mean_relaxation_with(fit, gamma_fn)
}

/// As [`mean_relaxation_from_fit`] with a caller-supplied gamma function.
pub fn mean_relaxation_with(fit: &StretchedExpFit, gamma: impl Fn(f64) -> f64) -> f64 {
    fit.tau_tilde / fit.alpha * gamma(1.0 / fit.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxModel {
    StretchedExp,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub stretched: StretchedExpFit,
    pub power: PowerLawFit,
    /// Squared log residuals of each model over the power-law fit bins.
    pub sse_stretched: f64,
    pub sse_power: f64,
    pub preferred: RelaxModel,
}

/// Fits both models and flags the one with the smaller squared log error on
/// the bins of the power-law range.
pub fn compare_models(pdf: &LogBinnedPdf, fit_range: (f64, f64)) -> Result<ModelComparison> {
    let stretched = fit_stretched_exp(pdf)?;
    let power = fit_tail_power_law(pdf, fit_range)?;
    let (mut sse_s, mut sse_p) = (0.0, 0.0);
    for i in pdf.occupied().filter(|&i| (fit_range.0..=fit_range.1).contains(&pdf.center(i))) {
        let (lo, hi) = (pdf.edges[i], pdf.edges[i + 1]);
        let y = pdf.densities[i].ln();
        let rs = y - (stretched.mass(lo, hi) / (hi - lo)).ln();
        let rp = y - (power.intercept - power.gamma * pdf.center(i).ln());
        sse_s += rs * rs;
        sse_p += rp * rp;
    }
    Ok(ModelComparison {
        stretched,
        power,
        sse_stretched: sse_s,
        sse_power: sse_p,
        preferred: if sse_p < sse_s { RelaxModel::PowerLaw } else { RelaxModel::StretchedExp },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    /// Mean over uncensored samples; NaN when there are none.
    pub mean_tau: f64,
    pub count: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaTable {
    pub rows: Vec<KappaRow>,
    /// Mean τ against κ over `fit_range`; needs three populated rows.
    pub fit: Option<LinFit>,
    pub fit_range: (f64, f64),
}

impl KappaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa,mean_tau,count,censored\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.kappa, r.mean_tau, r.count, r.censored));
        }
        out
    }
}

pub const DEFAULT_KAPPA_FIT_RANGE: (f64, f64) = (0.1, 0.6);

/// Relaxation samples for one κ: entries then relaxation times.
pub fn relax_at(series: &ImbalanceSeries, kappa: f64) -> Vec<RelaxationSample> {
    relaxation_times(series, &entry_times(series, kappa), kappa)
}

/// Mean relaxation time for each κ and a linear fit over `fit_range`.
pub fn mean_relax_vs_kappa(
    series: &ImbalanceSeries,
    kappas: &[f64],
    clock: RelaxClock,
    fit_range: (f64, f64),
) -> Result<KappaTable> {
    if kappas.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
        return Err(RelaxError::InvalidConfig("kappa must lie in (0, 1)".into()));
    }
    if kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RelaxError::InvalidConfig("kappas must be strictly increasing".into()));
    }
    let rows: Vec<KappaRow> = kappas
        .par_iter()
        .map(|&kappa| {
            let samples = relax_at(series, kappa);
            let done: Vec<u64> = samples.iter().filter(|s| !s.censored).map(|s| s.tau(clock)).collect();
            KappaRow {
                kappa,
                mean_tau: if done.is_empty() {
                    f64::NAN
                } else {
                    done.iter().sum::<u64>() as f64 / done.len() as f64
                },
                count: done.len(),
                censored: samples.len() - done.len(),
            }
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.count > 0 && (fit_range.0..=fit_range.1).contains(&r.kappa))
        .map(|r| (r.kappa, r.mean_tau))
        .unzip();
    let fit = if x.len() >= 3 { linfit(&x, &y).ok() } else { None };
    Ok(KappaTable { rows, fit, fit_range })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Level;
    use crate::numerics::{adaptive_simpson, log_bin};
    use crate::synth::{gen_tick_walk, sample_stretched_exp};
    use proptest::prelude::*;

    fn snap(bids: &[u64], asks: &[u64], trades: u64) -> BookSnapshot {
        BookSnapshot {
            timestamp_ns: 0,
            bids: bids.iter().enumerate().map(|(i, &v)| Level { price: 100 - i as i64, volume: v }).collect(),
            asks: asks.iter().enumerate().map(|(i, &v)| Level { price: 101 + i as i64, volume: v }).collect(),
            trade_count_delta: trades,
        }
    }

    fn series(sigma: &[f64]) -> ImbalanceSeries {
        ImbalanceSeries::from_sigma_hat(sigma.to_vec())
    }

    #[test]
    fn imbalance_examples() {
        let s = imbalance_series(&[snap(&[30, 30], &[20, 20], 2), snap(&[10], &[10], 1), snap(&[50], &[0], 0)], 2).unwrap();
        assert!((s.sigma_hat[0] - 0.2).abs() < 1e-15);
        assert_eq!(s.sigma_hat[1], 0.0);
        assert_eq!(s.sigma_hat[2], 1.0);
        assert_eq!(s.sigma_raw, vec![20, 0, 50]);
        assert_eq!(s.cumulative_trades, vec![2, 3, 3]);
        let s = imbalance_series(&[snap(&[30, 30], &[20, 20], 0)], 1).unwrap();
        assert!((s.sigma_hat[0] - 0.2).abs() < 1e-15);
        assert!(matches!(imbalance_series(&[snap(&[0], &[0], 0)], 1), Err(RelaxError::EmptySide { index: 0, .. })));
        assert!(matches!(imbalance_series(&[], 0), Err(RelaxError::InvalidDepth)));
    }

    #[test]
    fn entry_examples() {
        assert_eq!(entry_times(&series(&[0.1, 0.5, 0.1, 0.5]), 0.3), vec![1, 3]);
        assert_eq!(entry_times(&series(&[-0.1, -0.5, 0.1, 0.5]), 0.3), vec![1, 3]);
        assert!(entry_times(&series(&[0.5, 0.1]), 0.3).is_empty());
        assert!(entry_times(&series(&[0.3, 0.3, 0.5]), 0.3).is_empty());
        // sign flip straight across: |Σ̂| rises from 0.1 to 0.5
        assert_eq!(entry_times(&series(&[0.1, -0.5]), 0.3), vec![1]);
    }

    #[test]
    fn relaxation_examples() {
        let r = relaxation_times(&series(&[0.5, 0.2, -0.1]), &[0], 0.3);
        assert_eq!((r[0].tau_ticks, r[0].censored), (2, false));
        let r = relaxation_times(&series(&[0.5, 0.0, 0.3]), &[0], 0.3);
        assert_eq!(r[0].tau_ticks, 1);
        let r = relaxation_times(&series(&[-0.5, -0.2, -0.1, 0.4]), &[0], 0.3);
        assert_eq!(r[0].tau_ticks, 3);
        let r = relaxation_times(&series(&[0.5, 0.2, 0.1]), &[0], 0.3);
        assert_eq!((r[0].tau_ticks, r[0].censored), (3, true));
    }

    #[test]
    fn trade_clock_and_sessions() {
        let mut s = series(&[0.1, 0.5, 0.4, 0.2, 0.1, 0.5, -0.2]);
        s.cumulative_trades = vec![0, 3, 3, 4, 9, 9, 12];
        s.session_starts = vec![0, 4];
        let entries = entry_times(&s, 0.3);
        assert_eq!(entries, vec![1, 5]);
        let r = relaxation_times(&s, &entries, 0.3);
        // first excursion runs into the session end: censored after 3 snapshots
        assert_eq!((r[0].tau_ticks, r[0].tau_trades, r[0].censored), (3, 1, true));
        assert_eq!((r[1].tau_ticks, r[1].tau_trades, r[1].censored), (1, 3, false));
        // crossing at a session start does not count
        s.sigma_hat[3] = 0.1;
        s.sigma_hat[4] = 0.6;
        assert_eq!(entry_times(&s, 0.3), vec![1]);
    }

    #[test]
    fn split_sessions_by_local_date() {
        let mut s = series(&[0.0; 4]);
        let day = 86_400_000_000_000i64;
        s.timestamps = vec![0, 3_600_000_000_000, day + 1, day + 5];
        s.split_sessions(&SessionHours::all_day_utc());
        assert_eq!(s.session_starts, vec![0, 2]);
    }

    fn random_book(rng: &mut impl rand::Rng) -> BookSnapshot {
        let depth = rng.gen_range(1..=10);
        let mut v = |allow_zero: bool| -> Vec<u64> {
            (0..depth).map(|_| if allow_zero && rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..1000) }).collect()
        };
        let (bids, asks) = (v(true), v(true));
        let mut s = snap(&bids, &asks, 0);
        if s.bid_volume(10) + s.ask_volume(10) == 0 {
            s.bids[0].volume = 1;
        }
        s
    }

    #[test]
    fn imbalance_algebra_random_books() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let books: Vec<BookSnapshot> = (0..10_000).map(|_| random_book(&mut rng)).collect();
        let depth = 10;
        let s = imbalance_series(&books, depth).unwrap();
        for (b, &x) in books.iter().zip(&s.sigma_hat) {
            assert!((-1.0..=1.0).contains(&x));
            assert_eq!(x.abs() == 1.0, b.bid_volume(depth) == 0 || b.ask_volume(depth) == 0);
        }
        let swapped: Vec<BookSnapshot> = books
            .iter()
            .map(|b| BookSnapshot { bids: b.asks.clone(), asks: b.bids.clone(), ..b.clone() })
            .collect();
        let sw = imbalance_series(&swapped, depth).unwrap();
        assert!(s.sigma_hat.iter().zip(&sw.sigma_hat).all(|(a, b)| *a == -*b));
        let c: u64 = rng.gen_range(2..50);
        let scaled: Vec<BookSnapshot> = books
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.bids.iter_mut().chain(b.asks.iter_mut()).for_each(|l| l.volume *= c);
                b
            })
            .collect();
        assert_eq!(imbalance_series(&scaled, depth).unwrap().sigma_hat, s.sigma_hat);
        for k in [0.1, 0.3, 0.5, 0.7] {
            assert_eq!(entry_times(&s, k), entry_times(&sw, k));
            let a = relax_at(&s, k);
            let b = relax_at(&sw, k);
            assert_eq!(a.iter().map(|r| r.tau_ticks).collect::<Vec<_>>(), b.iter().map(|r| r.tau_ticks).collect::<Vec<_>>());
        }
    }

    /// Index ranges `[start, end)` of maximal runs with |Σ̂| > κ.
    fn excursions(s: &[f64], k: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, x) in s.iter().enumerate() {
            match (x.abs() > k, start) {
                (true, None) => start = Some(i),
                (false, Some(a)) => {
                    out.push((a, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            out.push((a, s.len()));
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn nesting_in_kappa(sigma in prop::collection::vec(-1.0f64..1.0, 2..200), k1 in 0.01f64..0.98, dk in 0.001f64..0.5) {
            let k2 = (k1 + dk).min(0.99);
            let s = series(&sigma);
            let e2 = entry_times(&s, k2);
            let ex = excursions(&sigma, k1);
            for &t in &e2 {
                prop_assert!(ex.iter().any(|&(a, b)| a <= t && t < b));
            }
        }

        #[test]
        fn relaxation_is_first_sign_change(sigma in prop::collection::vec(-1.0f64..1.0, 2..100), k in 0.05f64..0.9) {
            let s = series(&sigma);
            for r in relax_at(&s, k) {
                let e = r.entry_index;
                let naive = (e + 1..sigma.len()).find(|&j| sigma[j] * sigma[e] <= 0.0);
                match naive {
                    Some(j) => prop_assert_eq!((r.tau_ticks, r.censored), ((j - e) as u64, false)),
                    None => prop_assert!(r.censored),
                }
            }
        }
    }

    #[test]
    fn entry_counts_can_grow_with_kappa() {
        // one excursion above 0.3 holding three upward crossings of 0.7
        let s = series(&[0.0, 0.5, 0.8, 0.6, 0.8, 0.6, 0.8]);
        assert_eq!(entry_times(&s, 0.3), vec![1]);
        assert_eq!(entry_times(&s, 0.7), vec![2, 4, 6]);
    }

    #[test]
    fn nesting_holds_on_random_walk() {
        let w = gen_tick_walk(200_000, 0.0, 4).unwrap();
        let sigma: Vec<f64> = w.iter().map(|&x| (x as f64 / 30.0).tanh()).collect();
        let s = series(&sigma);
        for (k1, k2) in [(0.1, 0.2), (0.2, 0.5), (0.3, 0.7)] {
            let ex = excursions(&sigma, k1);
            for t in entry_times(&s, k2) {
                let i = ex.partition_point(|&(a, _)| a <= t);
                assert!(i > 0 && t < ex[i - 1].1);
            }
        }
    }

    #[test]
    fn random_walk_first_return_tail() {
        let w = gen_tick_walk(4_000_000, 0.0, 21).unwrap();
        let s = series(&w.iter().map(|&x| (x as f64).tanh()).collect::<Vec<_>>());
        let samples = relax_at(&s, 0.1);
        let h = relaxation_hist(&samples, RelaxClock::Ticks, 5).unwrap();
        let fit = fit_tail_power_law(&h.pdf, (10.0, 10_000.0)).unwrap();
        assert!((fit.gamma - 1.5).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn exact_power_law_tail() {
        let mut pdf = log_bin(&[1.0, 1e4], 5).unwrap();
        for i in 0..pdf.n_bins() {
            pdf.counts[i] = 1;
            pdf.densities[i] = pdf.center(i).powf(-1.5);
        }
        let fit = fit_tail_power_law(&pdf, (1.0, 1e4)).unwrap();
        assert!((fit.gamma - 1.5).abs() < 1e-12 && fit.stderr < 1e-10);
        assert!(matches!(fit_tail_power_law(&pdf, (1.0, 3.0)), Err(RelaxError::TooFewBins { .. })));
    }

    #[test]
    fn stretched_density_normalised() {
        for (t, a) in [(10.0, 0.5), (100.0, 0.3), (50.0, 1.0)] {
            let f = StretchedExpFit { tau_tilde: t, alpha: a, sse: 0.0 };
            let q = adaptive_simpson(|x| f.density(x.exp()) * x.exp(), -40.0, 25.0, 1e-10).unwrap();
            assert!((q - 1.0).abs() < 1e-6, "{t} {a}: {q}");
            assert!((f.mass(0.0, f64::INFINITY) - 1.0).abs() < 1e-12);
            let q = adaptive_simpson(|x| f.density(x), 2.0, 7.0, 1e-12).unwrap();
            assert!((f.mass(2.0, 7.0) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn stretched_fit_recovery() {
        let s = sample_stretched_exp(100.0, 0.6, 100_000, 3).unwrap();
        let fit = fit_stretched_exp(&log_bin(&s, 10).unwrap()).unwrap();
        assert!((fit.tau_tilde / 100.0 - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.alpha / 0.6 - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn exponential_fit_reaches_alpha_one() {
        let s = sample_stretched_exp(50.0, 1.0, 100_000, 8).unwrap();
        let fit = fit_stretched_exp(&log_bin(&s, 10).unwrap()).unwrap();
        assert!(fit.alpha >= 0.95 && fit.alpha <= 1.0, "{fit:?}");
    }

    #[test]
    fn stretched_fit_needs_bins() {
        let pdf = log_bin(&[1.0, 2.0, 50.0], 1).unwrap();
        assert!(matches!(fit_stretched_exp(&pdf), Err(RelaxError::TooFewBins { .. })));
    }

    #[test]
    fn mean_relaxation_examples() {
        let f = |t, a| StretchedExpFit { tau_tilde: t, alpha: a, sse: 0.0 };
        assert!((mean_relaxation_from_fit(&f(50.0, 1.0)) - 50.0).abs() < 1e-9);
        assert!((mean_relaxation_from_fit(&f(10.0, 0.5)) - 20.0).abs() < 1e-9);
        assert_eq!(mean_relaxation_with(&f(10.0, 0.5), |_| 2.0), 40.0);
    }

    #[test]
    fn mean_relaxation_is_relaxation_function_integral() {
        for (t, a) in [(10.0, 0.3), (10.0, 0.6), (100.0, 0.9), (50.0, 1.0)] {
            let f = StretchedExpFit { tau_tilde: t, alpha: a, sse: 0.0 };
            let q = adaptive_simpson(|x: f64| (-(x.exp() / t).powf(a)).exp() * x.exp(), -40.0, 15.0, 1e-12).unwrap();
            let m = mean_relaxation_from_fit(&f);
            assert!((m - q).abs() < 1e-6 * m, "({t},{a}): {m} vs {q}");
        }
    }

    #[test]
    fn mean_relaxation_differs_from_density_moment() {
        // first moment of the normalised density is τ̃ Γ(2/α)/Γ(1/α)
        for (t, a) in [(10.0, 0.5), (50.0, 1.0)] {
            let f = StretchedExpFit { tau_tilde: t, alpha: a, sse: 0.0 };
            let moment = adaptive_simpson(|x: f64| x.exp() * f.density(x.exp()) * x.exp(), -40.0, 15.0, 1e-12).unwrap();
            let formula = mean_relaxation_from_fit(&f);
            if a == 1.0 {
                assert!((moment / formula - 1.0).abs() < 1e-6);
            } else {
                assert!((moment / formula - 1.0).abs() > 0.5, "{moment} {formula}");
            }
        }
    }

    #[test]
    fn model_selection_flags_the_better_model() {
        let s = sample_stretched_exp(20.0, 0.8, 100_000, 5).unwrap();
        let c = compare_models(&log_bin(&s, 10).unwrap(), (1.0, 100.0)).unwrap();
        assert_eq!(c.preferred, RelaxModel::StretchedExp, "{c:?}");
        let w = gen_tick_walk(2_000_000, 0.0, 6).unwrap();
        let samples = relax_at(&series(&w.iter().map(|&x| (x as f64).tanh()).collect::<Vec<_>>()), 0.1);
        let h = relaxation_hist(&samples, RelaxClock::Ticks, 5).unwrap();
        let c = compare_models(&h.pdf, (10.0, 10_000.0)).unwrap();
        assert_eq!(c.preferred, RelaxModel::PowerLaw, "{c:?}");
    }

    #[test]
    fn kappa_table_linear_construction() {
        // one session per κ, opening above every threshold so that the only
        // upward crossing is through κ itself; that excursion lasts 100κ
        let kappas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let mut sigma = Vec::new();
        let mut starts = Vec::new();
        for &k in &kappas {
            starts.push(sigma.len());
            sigma.extend([0.99, k - 0.005]);
            sigma.extend(std::iter::repeat(k + 0.005).take((100.0f64 * k).round() as usize));
            sigma.push(0.0);
        }
        let mut s = series(&sigma);
        s.session_starts = starts;
        let t = mean_relax_vs_kappa(&s, &kappas, RelaxClock::Ticks, DEFAULT_KAPPA_FIT_RANGE).unwrap();
        assert_eq!(t.rows.len(), 6);
        for r in &t.rows {
            assert_eq!((r.count, r.censored), (1, 0));
            assert!((r.mean_tau - 100.0 * r.kappa).abs() < 1e-9);
        }
        let fit = t.fit.unwrap();
        assert!((fit.slope - 100.0).abs() < 1e-9 && fit.intercept.abs() < 1e-9, "{fit:?}");

        let one = mean_relax_vs_kappa(&s, &[0.3], RelaxClock::Ticks, DEFAULT_KAPPA_FIT_RANGE).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert!(one.fit.is_none());
        assert!(mean_relax_vs_kappa(&s, &[0.3, 0.2], RelaxClock::Ticks, DEFAULT_KAPPA_FIT_RANGE).is_err());
        let empty = mean_relax_vs_kappa(&s, &[0.95], RelaxClock::Ticks, DEFAULT_KAPPA_FIT_RANGE).unwrap();
        assert_eq!(empty.rows[0].count, 0);
    }

    #[test]
    fn random_walk_mean_tau_grows_with_kappa() {
        let mut ok = 0;
        for seed in 0..5 {
            let w = gen_tick_walk(400_000, 0.0, 300 + seed).unwrap();
            let s = series(&w.iter().map(|&x| (x as f64 / 20.0).tanh()).collect::<Vec<_>>());
            let t = mean_relax_vs_kappa(&s, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], RelaxClock::Ticks, DEFAULT_KAPPA_FIT_RANGE).unwrap();
            if t.fit.unwrap().slope > 0.0 {
                ok += 1;
            }
        }
        assert!(ok >= 4);
    }

    #[test]
    fn relaxation_hist_drops_zero_trades() {
        let samples = vec![
            RelaxationSample { entry_index: 0, tau_ticks: 3, tau_trades: 0, kappa: 0.1, censored: false },
            RelaxationSample { entry_index: 1, tau_ticks: 3, tau_trades: 2, kappa: 0.1, censored: false },
            RelaxationSample { entry_index: 2, tau_ticks: 9, tau_trades: 9, kappa: 0.1, censored: true },
        ];
        let h = relaxation_hist(&samples, RelaxClock::Trades, 5).unwrap();
        assert_eq!((h.censored, h.zero_trades, h.pdf.total_count), (1, 1, 1));
    }
}
