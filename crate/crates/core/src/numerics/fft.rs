use num_complex::Complex64;
use std::f64::consts::PI;

use super::{NumericsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `X_k = Σ x_j e^{-2πi jk/n}`
    Forward,
    /// `x_j = (1/n) Σ X_k e^{+2πi jk/n}`
    Inverse,
}

/// Iterative radix-2 Cooley-Tukey transform. The inverse includes the `1/n`
/// normalisation so that `inverse(forward(x)) == x`.
pub fn fft_in_place(data: &mut [Complex64], direction: Direction) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(NumericsError::BadLength(n));
    }
    if n == 1 {
        return Ok(());
    }

    // bit reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }

    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        // Twiddles computed directly rather than by repeated multiplication
        // so rounding error does not accumulate along a stage.
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, step * k as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = data[start + k];
                let b = data[start + k + half] * twiddles[k];
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }

    if direction == Direction::Inverse {
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

pub fn fft_complex(values: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    let mut out = values.to_vec();
    fft_in_place(&mut out, direction)?;
    Ok(out)
}

/// Transform of a real sequence. The length must be a power of two; callers pad.
pub fn fft_real(values: &[f64], direction: Direction) -> Result<Vec<Complex64>> {
    let mut out: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut out, direction)?;
    Ok(out)
}
