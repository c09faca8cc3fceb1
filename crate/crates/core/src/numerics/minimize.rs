//! Nelder-Mead simplex with box constraints enforced by clamping.

use super::{NumericsError, Result};

const MAX_EVALS: usize = 10_000;
const DIAMETER_TOL: f64 = 1e-8;

/// Per-dimension bound. `None` means unbounded.
pub type Bound = Option<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn clamp_point(x: &mut [f64], bounds: &[Bound]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        if let Some((lo, hi)) = *b {
            *v = v.clamp(lo, hi);
        }
    }
}

struct Counted<'a, F> {
    f: &'a F,
    bounds: &'a [Bound],
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn eval(&mut self, x: &mut [f64]) -> f64 {
        clamp_point(x, self.bounds);
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimise `objective` starting from `x0`.
///
/// Stops when the simplex diameter relative to `max(1, |x_best|)` drops below
/// 1e-8 or after 10⁴ evaluations. After convergence the simplex is rebuilt
/// around the best vertex and the search repeated until a restart no longer
/// improves the value, which guards against collapsed simplices.
pub fn minimize<F>(objective: F, x0: &[f64], bounds: &[Bound]) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    if dim == 0 {
        return Err(NumericsError::EmptyInput);
    }
    let unbounded = vec![None; dim];
    let bounds = if bounds.is_empty() { &unbounded[..] } else { bounds };
    assert_eq!(bounds.len(), dim, "one bound entry per dimension");

    let mut start = x0.to_vec();
    clamp_point(&mut start, bounds);
    let f0 = objective(&start);
    if !f0.is_finite() {
        return Err(NumericsError::NonFiniteObjective);
    }

    let mut counted = Counted {
        f: &objective,
        bounds,
        evals: 1,
    };
    let mut best = (start, f0);
    let mut converged;
    loop {
        let (x, v, conv) = run_simplex(&mut counted, &best.0, best.1);
        let improved = v < best.1 - 1e-12 * best.1.abs().max(1e-300);
        if v <= best.1 {
            best = (x, v);
        }
        converged = conv;
        if !improved || !conv || counted.evals >= MAX_EVALS {
            break;
        }
    }

    Ok(Minimum {
        x: best.0,
        value: best.1,
        evaluations: counted.evals,
        converged,
    })
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    f: &mut Counted<'_, F>,
    x0: &[f64],
    f0: f64,
) -> (Vec<f64>, f64, bool) {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut values: Vec<f64> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..dim {
        let step = if x0[i].abs() > 1e-8 { 0.05 * x0[i].abs() } else { 2.5e-4 };
        let mut v = x0.to_vec();
        v[i] += step;
        clamp_point(&mut v, f.bounds);
        if v[i] == x0[i] {
            // pinned at an upper bound
            v[i] -= step;
        }
        let fv = f.eval(&mut v);
        simplex.push(v);
        values.push(fv);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let scale = simplex[0].iter().map(|v| v.abs()).fold(1.0, f64::max);
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter / scale < DIAMETER_TOL {
            return (simplex.swap_remove(0), values[0], true);
        }
        if f.evals >= MAX_EVALS {
            return (simplex.swap_remove(0), values[0], false);
        }

        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut reflected = along(alpha);
        let fr = f.eval(&mut reflected);
        if fr < values[0] {
            let mut expanded = along(gamma);
            let fe = f.eval(&mut expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }

        let (mut contracted, fc) = if fr < values[dim] {
            let mut c = along(rho);
            let fc = f.eval(&mut c);
            (c, fc)
        } else {
            let mut c = along(-rho);
            let fc = f.eval(&mut c);
            (c, fc)
        };
        if fc < values[dim].min(fr) {
            std::mem::swap(&mut simplex[dim], &mut contracted);
            values[dim] = fc;
            continue;
        }

        // shrink toward the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            let mut v: Vec<f64> = best
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            values[i] = f.eval(&mut v);
            simplex[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_from_zero() {
        let m = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &[]).unwrap();
        assert!((m.x[0] - 3.0).abs() < 1e-6, "{:?}", m);
        assert!(m.converged);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(rosen, &[-1.2, 1.0], &[]).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m);
    }

    #[test]
    fn active_bound() {
        let m = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &[Some((0.0, 1.0))]).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-9, "{:?}", m);
    }

    #[test]
    fn start_on_upper_bound() {
        let m = minimize(|x| (x[0] - 0.2).powi(2), &[1.0], &[Some((0.0, 1.0))]).unwrap();
        assert!((m.x[0] - 0.2).abs() < 1e-6, "{:?}", m);
    }

    #[test]
    fn non_finite_start_is_rejected() {
        assert_eq!(
            minimize(|x| 1.0 / x[0], &[0.0], &[]),
            Err(NumericsError::NonFiniteObjective)
        );
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[1] + 2.0).powi(2) + x[0] * x[1];
        let a = minimize(f, &[0.3, 0.3], &[]).unwrap();
        let b = minimize(f, &[0.3, 0.3], &[]).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn never_worse_than_start(x0 in -5.0f64..5.0, y0 in -5.0f64..5.0) {
            let f = |x: &[f64]| (x[0].sin() * 3.0 + x[1]).powi(2) + (x[0] - x[1]).abs();
            let m = minimize(f, &[x0, y0], &[]).unwrap();
            prop_assert!(m.value <= f(&[x0, y0]));
        }
    }
}
