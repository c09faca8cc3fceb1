use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{NumericsError, Result};

/// Histogram with logarithmically spaced bins, normalised to a density.
///
/// `density[i] = counts[i] / (N * width[i])` where `N = total_count +
/// censored_count`, so the integral falls short of one by exactly the
/// censored (and out-of-range) fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBinnedPdf {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
    /// Observed (uncensored) samples, including any that fell outside the edges.
    pub total_count: u64,
    pub censored_count: u64,
    pub out_of_range: u64,
}

impl LogBinnedPdf {
    pub fn n_bins(&self) -> usize {
        self.densities.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Geometric midpoint of bin `i`.
    pub fn center(&self, i: usize) -> f64 {
        (self.edges[i] * self.edges[i + 1]).sqrt()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_bins()).filter(move |&i| self.counts[i] > 0)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied().count()
    }

    /// `Σ density·width`.
    pub fn mass(&self) -> f64 {
        (0..self.n_bins()).map(|i| self.densities[i] * self.width(i)).sum()
    }

    /// Renormalise as if `censored` additional samples had been drawn but
    /// never observed.
    pub fn with_censored(mut self, censored: u64) -> Self {
        self.censored_count = censored;
        self.renormalise();
        self
    }

    fn renormalise(&mut self) {
        let n = (self.total_count + self.censored_count) as f64;
        for i in 0..self.n_bins() {
            self.densities[i] = if n > 0.0 {
                self.counts[i] as f64 / (n * self.width(i))
            } else {
                0.0
            };
        }
    }

    /// CSV with header `tau_lo,tau_hi,density`, one row per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_lo,tau_hi,density\n");
        for i in 0..self.n_bins() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], self.densities[i]);
        }
        out
    }
}

/// Bins `samples` into edges `min · 10^{k/bins_per_decade}` covering
/// `[min, max]`. Empty bins are kept with density 0.
pub fn log_bin(samples: &[f64], bins_per_decade: u32) -> Result<LogBinnedPdf> {
    let (lo, hi) = positive_range(samples)?;
    let bpd = bins_per_decade.max(1) as f64;
    let n_bins = ((hi / lo).log10() * bpd).floor() as usize + 1;
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|k| lo * 10f64.powf(k as f64 / bpd))
        .collect();
    edges[0] = lo;
    // rounding in powf can leave the maximum sitting on the last edge
    if edges[n_bins] <= hi {
        edges.push(lo * 10f64.powf((n_bins + 1) as f64 / bpd));
    }
    log_bin_with_edges(samples, &edges)
}

/// Log binning for integer-valued samples (tick counts, event counts).
///
/// Edges sit on half-integers so each bin holds a whole number of lattice
/// points and its width equals that number.
pub fn log_bin_integer(samples: &[u64], bins_per_decade: u32) -> Result<LogBinnedPdf> {
    if samples.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    if let Some(&z) = samples.iter().find(|&&s| s == 0) {
        return Err(NumericsError::NonPositiveSample(z as f64));
    }
    let lo = *samples.iter().min().unwrap() as f64;
    let hi = *samples.iter().max().unwrap() as f64;
    let bpd = bins_per_decade.max(1) as f64;

    let mut edges = vec![lo - 0.5];
    let mut k = 1;
    while *edges.last().unwrap() <= hi {
        let raw = lo * 10f64.powf(k as f64 / bpd);
        let e = raw.round() + 0.5;
        if e > *edges.last().unwrap() {
            edges.push(e);
        }
        k += 1;
    }
    let as_f64: Vec<f64> = samples.iter().map(|&s| s as f64).collect();
    log_bin_with_edges(&as_f64, &edges)
}

/// Bins samples into caller-supplied edges. Samples outside
/// `[edges[0], edges[last])` are counted in `out_of_range`.
pub fn log_bin_with_edges(samples: &[f64], edges: &[f64]) -> Result<LogBinnedPdf> {
    if samples.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    if edges.len() < 2 {
        return Err(NumericsError::BadEdges("need at least two edges"));
    }
    if edges[0] <= 0.0 {
        return Err(NumericsError::BadEdges("first edge must be positive"));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NumericsError::BadEdges("edges must be strictly increasing"));
    }
    if let Some(&bad) = samples.iter().find(|&&s| !(s > 0.0)) {
        return Err(NumericsError::NonPositiveSample(bad));
    }

    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    let mut out_of_range = 0u64;
    for &s in samples {
        // first edge strictly greater than s, minus one
        let idx = edges.partition_point(|&e| e <= s);
        if idx == 0 || idx > n_bins {
            out_of_range += 1;
        } else {
            counts[idx - 1] += 1;
        }
    }

    let mut pdf = LogBinnedPdf {
        edges: edges.to_vec(),
        densities: vec![0.0; n_bins],
        counts,
        total_count: samples.len() as u64,
        censored_count: 0,
        out_of_range,
    };
    pdf.renormalise();
    Ok(pdf)
}

fn positive_range(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &s in samples {
        if !(s > 0.0) || !s.is_finite() {
            return Err(NumericsError::NonPositiveSample(s));
        }
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linfit;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_single_bin() {
        let pdf = log_bin(&[1.0, 1.0, 1.0], 5).unwrap();
        assert_eq!(pdf.occupied_count(), 1);
        assert!((pdf.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_decades_one_bin_each() {
        let pdf = log_bin(&[1.0, 10.0], 1).unwrap();
        assert_eq!(pdf.n_bins(), 2);
        for i in 0..2 {
            assert!((pdf.densities[i] * pdf.width(i) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn three_decades() {
        let pdf = log_bin(&[1.0, 10.0, 100.0], 1).unwrap();
        assert_eq!(pdf.counts, vec![1, 1, 1]);
    }

    #[test]
    fn constant_five_lands_in_one_bin() {
        let pdf = log_bin(&[5.0; 7], 4).unwrap();
        let occ: Vec<_> = pdf.occupied().collect();
        assert_eq!(occ.len(), 1);
        let i = occ[0];
        assert!(pdf.edges[i] <= 5.0 && 5.0 < pdf.edges[i + 1]);
    }

    #[test]
    fn errors() {
        assert_eq!(log_bin(&[], 3), Err(NumericsError::EmptyInput));
        assert!(matches!(log_bin(&[1.0, 0.0], 3), Err(NumericsError::NonPositiveSample(_))));
        assert!(log_bin_with_edges(&[1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn integer_bins_have_integer_widths() {
        let samples: Vec<u64> = (1..=5000).collect();
        let pdf = log_bin_integer(&samples, 10).unwrap();
        let mut covered = 0.0;
        for i in 0..pdf.n_bins() {
            let w = pdf.width(i);
            assert_eq!(w, w.round());
            assert_eq!(pdf.counts[i] as f64, w.min(5000.5 - pdf.edges[i]).max(0.0));
            covered += pdf.counts[i] as f64;
        }
        assert_eq!(covered, 5000.0);
        // uniform integers → flat density 1/5000
        for i in pdf.occupied() {
            if pdf.edges[i + 1] < 5000.0 {
                assert!((pdf.densities[i] * 5000.0 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn censoring_removes_mass() {
        let pdf = log_bin(&[1.0, 2.0, 3.0], 2).unwrap().with_censored(1);
        assert!((pdf.mass() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn power_law_slope_recovered() {
        // inverse transform for p(x) ∝ x^{-1.5} on [1, 1e4]
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (1.0f64, 1e4f64);
        let (ia, ib) = (a.powf(-0.5), b.powf(-0.5));
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = rng.gen();
                (ia - u * (ia - ib)).powf(-2.0)
            })
            .collect();
        let pdf = log_bin(&samples, 5).unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pdf
            .occupied()
            .filter(|&i| pdf.edges[i + 1] <= b)
            .map(|i| (pdf.center(i).ln(), pdf.densities[i].ln()))
            .unzip();
        let fit = linfit(&xs, &ys).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.05, "slope {}", fit.slope);
    }

    proptest! {
        #[test]
        fn counts_are_conserved(samples in prop::collection::vec(1e-3f64..1e6, 1..200), bpd in 1u32..12) {
            let pdf = log_bin(&samples, bpd).unwrap();
            let binned: u64 = pdf.counts.iter().sum();
            prop_assert_eq!(binned + pdf.out_of_range, samples.len() as u64);
            prop_assert_eq!(pdf.out_of_range, 0);
            prop_assert!(pdf.mass() <= 1.0 + 1e-9);
        }

        #[test]
        fn fixed_edges_conserve_counts(samples in prop::collection::vec(1e-2f64..1e3, 1..200)) {
            let edges = [0.1, 1.0, 10.0, 100.0];
            let pdf = log_bin_with_edges(&samples, &edges).unwrap();
            let binned: u64 = pdf.counts.iter().sum();
            prop_assert_eq!(binned + pdf.out_of_range, samples.len() as u64);
            prop_assert!(pdf.mass() <= 1.0 + 1e-9);
        }
    }
}

/// Equal-width histogram on `[lo, hi]`, normalised so that the in-range
/// densities integrate to one. The last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub densities: Vec<f64>,
    pub out_of_range: u64,
}

impl UniformHistogram {
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0, "need hi > lo and at least one bin");
        let mut counts = vec![0u64; bins];
        let mut out_of_range = 0;
        let width = (hi - lo) / bins as f64;
        for v in values {
            if !(v >= lo && v <= hi) {
                out_of_range += 1;
                continue;
            }
            let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let total: u64 = counts.iter().sum();
        let densities = counts
            .iter()
            .map(|&c| if total > 0 { c as f64 / (total as f64 * width) } else { 0.0 })
            .collect();
        Self {
            lo,
            hi,
            counts,
            densities,
            out_of_range,
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_lo(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.bin_width()
    }

    pub fn to_csv(&self, lo_name: &str, hi_name: &str) -> String {
        let mut out = format!("{lo_name},{hi_name},count,density\n");
        for i in 0..self.counts.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.bin_lo(i),
                self.bin_lo(i + 1),
                self.counts[i],
                self.densities[i]
            );
        }
        out
    }
}

#[cfg(test)]
mod uniform_tests {
    use super::*;

    #[test]
    fn delta_and_normalisation() {
        let h = UniformHistogram::new(vec![0.5; 20], 0.0, 1.0, 10);
        assert_eq!(h.counts[5], 20);
        assert!((h.densities[5] - 10.0).abs() < 1e-12);
        let mass: f64 = h.densities.iter().map(|d| d * h.bin_width()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edges_and_outliers() {
        let h = UniformHistogram::new(vec![0.0, 1.0, 1.5, -0.1], 0.0, 1.0, 4);
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
        assert_eq!(h.out_of_range, 2);
    }
}
