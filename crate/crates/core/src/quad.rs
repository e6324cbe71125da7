//! One-dimensional quadrature rules.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let floor = 16.0 * f64::EPSILON * (b - a).abs() * fa.abs().max(fm.abs()).max(fb.abs());
    let out = simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, floor, MAX_DEPTH);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Quadrature { a, b })
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return f64::NAN;
    }
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, floor, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, floor, depth - 1)
}

/// Composite Simpson weights on `n_intervals + 1` equispaced nodes of `[a, b]`.
pub fn simpson_weights(a: f64, b: f64, n_intervals: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n_intervals >= 2 && n_intervals.is_multiple_of(2), "Simpson needs an even interval count");
    let h = (b - a) / n_intervals as f64;
    let nodes = (0..=n_intervals).map(|j| a + h * j as f64).collect();
    let weights = (0..=n_intervals)
        .map(|j| {
            let c = if j == 0 || j == n_intervals {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn adaptive_simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|t| (-t * t).exp(), -6.0, 6.0, 1e-12).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn adaptive_simpson_stops_on_nan() {
        let mut calls = 0;
        let out = adaptive_simpson(
            |x| {
                calls += 1;
                if x > 0.7 {
                    f64::NAN
                } else {
                    x
                }
            },
            0.0,
            1.0,
            1e-13,
        );
        assert!(out.is_err());
        assert!(calls < 1000, "{calls} evaluations");
    }

    #[test]
    fn adaptive_simpson_terminates_on_noisy_peak() {
        let mut calls = 0u64;
        let v = adaptive_simpson(
            |t| {
                calls += 1;
                let d = t - 3.0696;
                1.0 / (1e-3 + d * d) + 1e-12 * (1e9 * t).sin()
            },
            0.0,
            PI,
            1e-13,
        )
        .unwrap();
        let exact = ((PI - 3.0696) / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt()
            + (3.0696 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt();
        assert!((v - exact).abs() < 1e-8 * exact, "{v} vs {exact}");
        assert!(calls < 2_000_000, "{calls} evaluations");
    }

    #[test]
    fn adaptive_simpson_handles_sqrt_endpoint() {
        let v = adaptive_simpson(|t| (1.0 - t * t).max(0.0).sqrt(), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn simpson_weights_are_exact_on_cubics() {
        let (x, w) = simpson_weights(0.0, 2.0, 8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * x).sum();
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exact_on_high_degree() {
        let (x, w) = gauss_legendre(16);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(7);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((v - 2.0 / 13.0).abs() < 1e-14);
    }
}
