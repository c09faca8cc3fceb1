//! Synthetic series with known statistics, used as ground truth by the
//! analysis modules.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)`, so output is a
//! pure function of the arguments within a build.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{fft_in_place, Direction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmSpec {
    pub n: usize,
    pub hurst: f64,
    /// Standard deviation of the lag-1 increment.
    pub scale: f64,
    pub seed: u64,
}

impl FbmSpec {
    pub fn new(n: usize, hurst: f64, seed: u64) -> Self {
        Self {
            n,
            hurst,
            scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(SynthError::InvalidParameter(format!(
                "hurst must lie in (0, 1), got {}",
                self.hurst
            )));
        }
        if self.n < 2 {
            return Err(SynthError::InvalidParameter(format!("n must be >= 2, got {}", self.n)));
        }
        check_scale(self.scale)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(SynthError::InvalidParameter(format!("scale must be positive, got {scale}")))
    }
}

fn cumulate(increments: impl IntoIterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(acc);
    for d in increments.into_iter().take(n - 1) {
        acc += d;
        out.push(acc);
    }
    out
}

/// Gaussian random walk of length `n` starting at 0.
pub fn gen_brownian(n: usize, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(SynthError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    check_scale(scale)?;
    let mut rng = rng_for(seed);
    let steps = (0..n - 1).map(|_| scale * rng.sample::<f64, _>(StandardNormal));
    Ok(cumulate(steps.collect::<Vec<_>>(), n))
}

/// Integer walk with steps in {−1, 0, +1}, `P(0) = p_zero`.
pub fn gen_tick_walk(n: usize, p_zero: f64, seed: u64) -> Result<Vec<i64>> {
    if n < 2 {
        return Err(SynthError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(0.0..1.0).contains(&p_zero) {
        return Err(SynthError::InvalidParameter(format!("p_zero must be in [0, 1), got {p_zero}")));
    }
    let mut rng = rng_for(seed);
    let mut out = Vec::with_capacity(n);
    let mut p = 0i64;
    out.push(p);
    let up = p_zero + (1.0 - p_zero) / 2.0;
    for _ in 1..n {
        let u: f64 = rng.gen();
        if u >= up {
            p += 1;
        } else if u >= p_zero {
            p -= 1;
        }
        out.push(p);
    }
    Ok(out)
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Fractional Brownian motion of length `spec.n` starting at 0.
///
/// Increments come from circulant embedding of the fGn autocovariance. If the
/// embedding has a materially negative eigenvalue the exact Durbin-Levinson
/// (Hosking) recursion is used instead.
pub fn gen_fbm(spec: &FbmSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let m = spec.n - 1;
    let noise = match fgn_circulant(m, spec.hurst, &mut rng) {
        Some(v) => v,
        None => {
            log::warn!(
                "circulant embedding not non-negative definite for H={} n={}; using Hosking recursion",
                spec.hurst,
                spec.n
            );
            fgn_hosking(m, spec.hurst, &mut rng)
        }
    };
    Ok(cumulate(noise.into_iter().map(|v| v * spec.scale), spec.n))
}

/// Unit-variance fGn of length `m` by circulant embedding, or `None` when the
/// embedding is not non-negative definite.
pub fn fgn_circulant<R: Rng>(m: usize, hurst: f64, rng: &mut R) -> Option<Vec<f64>> {
    let half = m.max(2).next_power_of_two();
    let size = 2 * half;
    let mut row: Vec<Complex64> = (0..size)
        .map(|j| {
            let lag = if j <= half { j } else { size - j };
            Complex64::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    fft_in_place(&mut row, Direction::Forward).expect("power-of-two length");

    let max_eig = row.iter().map(|z| z.re).fold(0.0, f64::max);
    let mut weights = Vec::with_capacity(size);
    for z in &row {
        let lambda = z.re;
        if lambda < -1e-10 * max_eig {
            return None;
        }
        weights.push((lambda.max(0.0) / size as f64).sqrt());
    }

    let mut w: Vec<Complex64> = weights
        .iter()
        .map(|&s| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex64::new(s * a, s * b)
        })
        .collect();
    fft_in_place(&mut w, Direction::Forward).expect("power-of-two length");
    Some(w.iter().take(m).map(|z| z.re).collect())
}

/// Unit-variance fGn of length `m` by the exact Durbin-Levinson recursion.
/// O(m²); intended as a fallback and cross-check.
pub fn fgn_hosking<R: Rng>(m: usize, hurst: f64, rng: &mut R) -> Vec<f64> {
    let gamma: Vec<f64> = (0..=m).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut out = Vec::with_capacity(m);
    let mut phi: Vec<f64> = Vec::with_capacity(m);
    let mut prev_phi: Vec<f64> = Vec::with_capacity(m);
    let mut v = gamma[0];
    for t in 0..m {
        let mean: f64 = phi.iter().enumerate().map(|(j, p)| p * out[t - 1 - j]).sum();
        let z: f64 = rng.sample(StandardNormal);
        out.push(mean + v.sqrt() * z);
        if t + 1 == m {
            break;
        }
        // update coefficients for predicting x_{t+1}
        let num = gamma[t + 1] - phi.iter().enumerate().map(|(j, p)| p * gamma[t - j]).sum::<f64>();
        let k = num / v;
        std::mem::swap(&mut prev_phi, &mut phi);
        phi.clear();
        for j in 0..prev_phi.len() {
            phi.push(prev_phi[j] - k * prev_phi[prev_phi.len() - 1 - j]);
        }
        phi.push(k);
        v *= 1.0 - k * k;
    }
    out
}

/// Draws from the normalised stretched-exponential density
/// `α/(τ̃ Γ(1/α)) exp(−(τ/τ̃)^α)`.
///
/// The density is a generalised gamma law: `(τ/τ̃)^α ~ Gamma(1/α, 1)`.
pub fn sample_stretched_exp(tau_tilde: f64, alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(tau_tilde > 0.0) || !(alpha > 0.0) {
        return Err(SynthError::InvalidParameter("tau_tilde and alpha must be positive".into()));
    }
    let g = Gamma::new(1.0 / alpha, 1.0).map_err(|e| SynthError::InvalidParameter(e.to_string()))?;
    let mut rng = rng_for(seed);
    Ok((0..n)
        .map(|_| tau_tilde * g.sample(&mut rng).powf(1.0 / alpha))
        .collect())
}

/// Draws from the first-passage model
/// `ν/Γ(α/ν) · β^{2α}/(τ+τ₀)^{α+1} · exp(−(β²/(τ+τ₀))^ν)` with `τ₀ = 0`.
///
/// With `u = (β²/τ)^ν` the density maps onto `Gamma(α/ν, 1)`.
pub fn sample_first_passage_model(alpha: f64, nu: f64, beta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && nu > 0.0 && beta > 0.0) {
        return Err(SynthError::InvalidParameter("alpha, nu, beta must be positive".into()));
    }
    let g = Gamma::new(alpha / nu, 1.0).map_err(|e| SynthError::InvalidParameter(e.to_string()))?;
    let mut rng = rng_for(seed);
    let b2 = beta * beta;
    Ok((0..n)
        .map(|_| {
            let u: f64 = g.sample(&mut rng);
            b2 * u.max(f64::MIN_POSITIVE).powf(-1.0 / nu)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ks_two_sample, mean, variance};

    fn diffs(x: &[f64]) -> Vec<f64> {
        x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn lag_cov_zero_mean(x: &[f64], k: usize) -> f64 {
        x.iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / (x.len() - k) as f64
    }

    #[test]
    fn brownian_basics() {
        let x = gen_brownian(2, 1.0, 99).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x[0], 0.0);
        assert_eq!(gen_brownian(500, 2.0, 4).unwrap(), gen_brownian(500, 2.0, 4).unwrap());
        assert!(gen_brownian(1, 1.0, 0).is_err());
        assert!(gen_brownian(10, 0.0, 0).is_err());
    }

    #[test]
    fn brownian_increment_variance() {
        let x = gen_brownian(1_000_000, 1.7, 5).unwrap();
        let v = variance(&diffs(&x));
        assert!((v / (1.7 * 1.7) - 1.0).abs() < 0.01, "variance {v}");
    }

    #[test]
    fn tick_walk_properties() {
        let w = gen_tick_walk(100_000, 0.0, 1).unwrap();
        let steps: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]) as f64).collect();
        assert!(steps.iter().all(|s| s.abs() == 1.0));
        assert!(mean(&steps).abs() < 3.0 / (steps.len() as f64).sqrt());

        let w = gen_tick_walk(100_000, 0.9, 2).unwrap();
        let zeros = w.windows(2).filter(|p| p[0] == p[1]).count() as f64 / 99_999.0;
        assert!((zeros - 0.9).abs() < 0.01, "{zeros}");
        assert_eq!(w[0], 0);

        assert_eq!(gen_tick_walk(1000, 0.3, 8).unwrap(), gen_tick_walk(1000, 0.3, 8).unwrap());
        assert!(gen_tick_walk(10, 1.0, 0).is_err());
        assert!(gen_tick_walk(10, -0.1, 0).is_err());
    }

    #[test]
    fn fbm_spec_validation() {
        assert!(FbmSpec::new(10, 0.0, 1).validate().is_err());
        assert!(FbmSpec::new(10, 1.0, 1).validate().is_err());
        assert!(FbmSpec::new(1, 0.5, 1).validate().is_err());
        let x = gen_fbm(&FbmSpec::new(2, 0.5, 1)).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn fbm_half_is_uncorrelated() {
        let n = 1 << 16;
        let inc = diffs(&gen_fbm(&FbmSpec::new(n, 0.5, 3)).unwrap());
        let r1 = lag_cov_zero_mean(&inc, 1) / lag_cov_zero_mean(&inc, 0);
        assert!(r1.abs() < 3.0 / (n as f64).sqrt(), "lag-1 autocorrelation {r1}");
    }

    #[test]
    fn fbm_autocovariance_matches_closed_form() {
        let n = 1 << 16;
        let seeds = 16;
        let mut acc = [0.0; 9];
        for seed in 0..seeds {
            let inc = diffs(&gen_fbm(&FbmSpec::new(n, 0.75, seed)).unwrap());
            for (k, a) in acc.iter_mut().enumerate() {
                *a += lag_cov_zero_mean(&inc, k) / seeds as f64;
            }
        }
        for (k, &est) in acc.iter().enumerate().skip(1) {
            let exact = fgn_autocovariance(0.75, k);
            assert!(((est - exact) / exact).abs() < 0.05, "lag {k}: {est} vs {exact}");
        }
    }

    #[test]
    fn fbm_variance_growth() {
        // Var X(64) / Var X(1) = 64^{2H}
        let (h, m, seeds) = (0.3, 64usize, 400u64);
        let mut x1 = Vec::new();
        let mut xm = Vec::new();
        for seed in 0..seeds {
            let x = gen_fbm(&FbmSpec::new(4096, h, 1000 + seed)).unwrap();
            // pool non-overlapping increments; stationarity of increments makes
            // each one a draw of X(m) − X(0)
            for start in (0..4096 - m).step_by(m) {
                xm.push(x[start + m] - x[start]);
                x1.push(x[start + 1] - x[start]);
            }
        }
        let ratio = variance(&xm) / variance(&x1);
        let expected = (m as f64).powf(2.0 * h);
        assert!(((ratio - expected) / expected).abs() < 0.10, "{ratio} vs {expected}");
    }

    #[test]
    fn fbm_self_similarity_over_scales() {
        let h = 0.7;
        let n = 4096;
        let seeds = 200;
        let paths: Vec<Vec<f64>> = (0..seeds)
            .map(|s| gen_fbm(&FbmSpec::new(n, h, 77 + s)).unwrap())
            .collect();
        for m in [2usize, 4, 8, 16, 32, 64, 128, 256] {
            let incs: Vec<f64> = paths
                .iter()
                .flat_map(|x| (0..n - m).step_by(m).map(move |s| x[s + m] - x[s]))
                .collect();
            let sd = variance(&incs).sqrt();
            let expected = (m as f64).powf(h);
            assert!(((sd - expected) / expected).abs() < 0.10, "m={m}: {sd} vs {expected}");
        }
    }

    #[test]
    fn fbm_half_matches_brownian_in_distribution() {
        let mut rejections = 0;
        for seed in 0..20 {
            let a = diffs(&gen_fbm(&FbmSpec::new(5000, 0.5, seed)).unwrap());
            let b = diffs(&gen_brownian(5000, 1.0, 10_000 + seed).unwrap());
            if ks_two_sample(&a, &b).rejects_at(0.01) {
                rejections += 1;
            }
        }
        assert!(rejections <= 2, "{rejections} rejections out of 20");
    }

    #[test]
    fn hosking_reproduces_autocovariance() {
        let h = 0.8;
        let m = 256;
        let reps = 400;
        let mut acc = [0.0; 4];
        for seed in 0..reps {
            let x = fgn_hosking(m, h, &mut rng_for(seed));
            for (k, a) in acc.iter_mut().enumerate() {
                *a += lag_cov_zero_mean(&x, k) / reps as f64;
            }
        }
        for (k, &est) in acc.iter().enumerate() {
            let exact = fgn_autocovariance(h, k);
            assert!((est - exact).abs() < 0.05, "lag {k}: {est} vs {exact}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let s = FbmSpec::new(1000, 0.42, 17);
        assert_eq!(gen_fbm(&s).unwrap(), gen_fbm(&s).unwrap());
        assert_ne!(gen_fbm(&s).unwrap(), gen_fbm(&FbmSpec { seed: 18, ..s }).unwrap());
    }

    #[test]
    fn stretched_exp_sampler_mean() {
        // mean of the normalised density is τ̃ Γ(2/α)/Γ(1/α)
        use crate::numerics::gamma_fn;
        let (tt, a) = (10.0, 0.5);
        let s = sample_stretched_exp(tt, a, 200_000, 3).unwrap();
        let expected = tt * gamma_fn(2.0 / a) / gamma_fn(1.0 / a);
        assert!((mean(&s) / expected - 1.0).abs() < 0.03);
    }

    #[test]
    fn first_passage_sampler_median() {
        // α=0.5, ν=1: τ = β²/u with u ~ Gamma(1/2) = χ²₁/2, so the median is
        // β² / (median(χ²₁)/2) with median(χ²₁) = 0.454936.
        let mut s = sample_first_passage_model(0.5, 1.0, 20.0, 100_001, 4).unwrap();
        s.sort_by(f64::total_cmp);
        let med = s[50_000];
        let expected = 400.0 / (0.454_936_4 / 2.0);
        assert!((med / expected - 1.0).abs() < 0.02, "{med} vs {expected}");
    }
}
