use serde::{Deserialize, Serialize};

use super::{NumericsError, Result};

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
}

impl LinFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn linfit(x: &[f64], y: &[f64]) -> Result<LinFit> {
    if x.len() != y.len() {
        return Err(NumericsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(NumericsError::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;

    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(NumericsError::DegenerateX);
    }

    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };

    Ok(LinFit {
        slope,
        intercept,
        slope_stderr,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = linfit(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn constant_y() {
        let fit = linfit(&[1.0, 2.0, 3.0, 4.0], &[5.0; 4]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.intercept, 5.0);
    }

    #[test]
    fn degenerate_and_short() {
        assert_eq!(linfit(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(NumericsError::DegenerateX));
        assert!(matches!(
            linfit(&[1.0, 2.0], &[1.0, 2.0]),
            Err(NumericsError::TooFewPoints { .. })
        ));
        assert!(matches!(
            linfit(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(NumericsError::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn noisy_slope_within_three_stderr() {
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut misses = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
            let y: Vec<f64> = x.iter().map(|v| 3.0 * v + noise.sample(&mut rng)).collect();
            let fit = linfit(&x, &y).unwrap();
            if (fit.slope - 3.0).abs() > 3.0 * fit.slope_stderr {
                misses += 1;
            }
        }
        // a 3σ band is violated with probability ≈ 0.3%
        assert!(misses <= 1, "{misses} misses");
    }
}
