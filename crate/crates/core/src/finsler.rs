//! Fiber-level quantities of `F = α φ(β/α)`: F itself, the fundamental
//! tensor, Cartan torsion, angular metric and the Busemann–Hausdorff density.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::jets::JetScalar;
use crate::phi::PhiFamily;
use crate::quad::{gauss_legendre, simpson_weights};
use crate::tensor::Tensor;

/// `F(x, y)`; fails on singular directions of almost-regular φ.
pub fn finsler_eval(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<f64> {
    let (alpha, beta) = m.alpha_beta(x, y)?;
    if alpha <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let s = beta / alpha;
    let phi = f.series(s, 0)?[0];
    if phi <= 0.0 {
        return Err(Error::NonPositivePhi(s));
    }
    Ok(alpha * phi)
}

/// `F(x, y)` with φ taken on its closed interval.
fn finsler_value_closed(a: &DMatrix<f64>, b: &DVector<f64>, f: &PhiFamily, y: &[f64]) -> Result<(f64, f64)> {
    let yv = DVector::from_column_slice(y);
    let alpha = yv.dot(&(a * &yv)).max(0.0).sqrt();
    if alpha <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let s = b.dot(&yv) / alpha;
    let phi = f.value(s)?;
    if phi <= 0.0 {
        return Err(Error::NonPositivePhi(s));
    }
    Ok((alpha * phi, s))
}

/// y-jet of `F²` at fixed `a_ij`, `b_i`.
pub fn f2_jet(a: &DMatrix<f64>, b: &DVector<f64>, f: &PhiFamily, y: &[f64], order: usize) -> Result<JetScalar> {
    let n = y.len();
    if a.nrows() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: n,
        });
    }
    let yv = JetScalar::variables(y, order)?;
    let (alpha2, beta) = alpha_beta_jets(a, b, &yv);
    if alpha2.value() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let alpha = alpha2.sqrt()?;
    let s = beta.try_div(&alpha)?;
    let phi = s.compose_series(&f.series(s.value(), order)?);
    if phi.value() <= 0.0 {
        return Err(Error::NonPositivePhi(s.value()));
    }
    Ok(&alpha2 * &(&phi * &phi))
}

/// Jets of `α²` and `β` in the direction variables `yv`.
pub fn alpha_beta_jets(a: &DMatrix<f64>, b: &DVector<f64>, yv: &[JetScalar]) -> (JetScalar, JetScalar) {
    let n = yv.len();
    let mut alpha2 = yv[0].lift(0.0);
    let mut beta = yv[0].lift(0.0);
    for i in 0..n {
        let mut row = yv[0].lift(0.0);
        for j in 0..n {
            row = &row + &yv[j].scale(a[(i, j)]);
        }
        alpha2 = &alpha2 + &(&yv[i] * &row);
        beta = &beta + &yv[i].scale(b[i]);
    }
    (alpha2, beta)
}

/// y-jet of `F²` at a chart point.
pub fn f2_jet_at(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64], order: usize) -> Result<JetScalar> {
    f2_jet(&m.a(x)?, &m.b(x)?, f, y, order)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalData {
    pub f: f64,
    /// `g_ij`, row-major `n × n`.
    pub g: Tensor,
    pub g_inv: Tensor,
    pub cartan: Tensor,
    pub mean_cartan: Vec<f64>,
    pub y_lower: Vec<f64>,
    pub ell: Vec<f64>,
    pub angular: Tensor,
}

impl FundamentalData {
    pub fn g_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.g.n, self.g.n, &self.g.data)
    }

    /// `g_y(u, v)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.g.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.g.get(&[i, j]) * u[i] * v[j];
            }
        }
        acc
    }
}

/// Fundamental tensor and Cartan data from an order-3 jet of F².
pub fn fundamental(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<FundamentalData> {
    let p = f2_jet_at(m, f, x, y, 3)?;
    fundamental_from_jet(&p, y)
}

pub fn fundamental_from_jet(p: &JetScalar, y: &[f64]) -> Result<FundamentalData> {
    let n = y.len();
    let f = p.value().max(0.0).sqrt();
    let g = Tensor::from_fn(n, 2, |i| 0.5 * p.partial_of(i));
    let gm = DMatrix::from_row_slice(n, n, &g.data);
    let chol = gm.cholesky().ok_or(Error::SingularG)?;
    let gi = chol.inverse();
    let g_inv = Tensor::from_fn(n, 2, |i| gi[(i[0], i[1])]);
    let cartan = Tensor::from_fn(n, 3, |i| 0.25 * p.partial_of(i));
    let mean_cartan = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += gi[(j, k)] * cartan.get(&[i, j, k]);
                }
            }
            acc
        })
        .collect();
    let y_lower: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g.get(&[i, j]) * y[j]).sum())
        .collect();
    let ell = y.iter().map(|v| v / f).collect();
    let angular = Tensor::from_fn(n, 2, |i| g.get(i) - y_lower[i[0]] * y_lower[i[1]] / (f * f));
    Ok(FundamentalData {
        f,
        g,
        g_inv,
        cartan,
        mean_cartan,
        y_lower,
        ell,
        angular,
    })
}

/// Busemann–Hausdorff density and whether any node sat in the singular band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaResult {
    pub sigma: f64,
    pub approximate: bool,
}

/// Node counts for the unit-ball volume quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaGrid {
    /// Simpson intervals on the circle.
    pub circle: usize,
    /// Gauss–Legendre nodes in cos θ.
    pub polar: usize,
    /// Trapezoid nodes in azimuth.
    pub azimuth: usize,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid {
            circle: 2048,
            polar: 128,
            azimuth: 256,
        }
    }
}

pub fn sigma_bh(m: &MetricSpec, f: &PhiFamily, x: &[f64]) -> Result<SigmaResult> {
    sigma_bh_with(m, f, x, SigmaGrid::default())
}

pub fn sigma_bh_with(m: &MetricSpec, f: &PhiFamily, x: &[f64], grid: SigmaGrid) -> Result<SigmaResult> {
    let a = m.a(x)?;
    let b = m.b(x)?;
    let band = match f.singular_bound() {
        Some(_) => {
            let ainv = a.clone().cholesky().ok_or_else(|| Error::SingularMetric(x.to_vec()))?.inverse();
            Some(b.dot(&(&ainv * &b)).max(0.0).sqrt() * (1.0 - m.delta))
        }
        None => None,
    };
    let norm = |y: &[f64]| -> Result<(f64, bool)> {
        let (fv, s) = finsler_value_closed(&a, &b, f, y)?;
        Ok((fv, band.is_some_and(|lim| s.abs() > lim)))
    };
    let (vol, approximate) = unit_ball_volume(m.n, norm, grid)?;
    Ok(SigmaResult {
        sigma: unit_ball_euclidean(m.n)? / vol,
        approximate,
    })
}

/// Volume of the Euclidean unit ball.
pub fn unit_ball_euclidean(n: usize) -> Result<f64> {
    match n {
        2 => Ok(std::f64::consts::PI),
        3 => Ok(4.0 * std::f64::consts::PI / 3.0),
        _ => Err(Error::Dimension { expected: 2, got: n }),
    }
}

/// Volume of `{y : F(y) < 1}` for a norm given on directions; the flag is
/// raised by the norm callback for nodes in a singular band.
pub fn unit_ball_volume<N>(n: usize, norm: N, grid: SigmaGrid) -> Result<(f64, bool)>
where
    N: Fn(&[f64]) -> Result<(f64, bool)> + Sync,
{
    // 1/F at a direction, with one half-step shift on failure.
    let radius = |dir: &dyn Fn(f64) -> Vec<f64>, h: f64, node: usize| -> Result<(f64, bool)> {
        for shift in [0.0, 0.5 * h] {
            if let Ok((fv, flag)) = norm(&dir(shift)) {
                if fv > 0.0 && fv.is_finite() {
                    return Ok((1.0 / fv, flag || shift != 0.0));
                }
            }
        }
        Err(Error::SingularDirectionInQuadrature { node })
    };
    match n {
        2 => {
            let two_pi = 2.0 * std::f64::consts::PI;
            let (nodes, weights) = simpson_weights(0.0, two_pi, grid.circle);
            let h = two_pi / grid.circle as f64;
            let mut area = 0.0;
            let mut approx = false;
            for (j, (t, w)) in nodes.iter().zip(&weights).enumerate() {
                let dir = |shift: f64| vec![(t + shift).cos(), (t + shift).sin()];
                let (r, flag) = radius(&dir, h, j)?;
                approx |= flag;
                area += w * 0.5 * r * r;
            }
            Ok((area, approx))
        }
        3 => {
            let (us, ws) = gauss_legendre(grid.polar);
            let two_pi = 2.0 * std::f64::consts::PI;
            let hphi = two_pi / grid.azimuth as f64;
            let rows: Vec<Result<(f64, bool)>> = us
                .par_iter()
                .enumerate()
                .map(|(i, &u)| {
                    let sin_t = (1.0 - u * u).max(0.0).sqrt();
                    let mut acc = 0.0;
                    let mut approx = false;
                    for j in 0..grid.azimuth {
                        let p = hphi * j as f64;
                        let dir = |shift: f64| {
                            let q = p + shift;
                            vec![sin_t * q.cos(), sin_t * q.sin(), u]
                        };
                        let (r, flag) = radius(&dir, hphi, i * grid.azimuth + j)?;
                        approx |= flag;
                        acc += r * r * r / 3.0;
                    }
                    Ok((acc * hphi, approx))
                })
                .collect();
            let mut vol = 0.0;
            let mut approx = false;
            for (row, w) in rows.into_iter().zip(&ws) {
                let (v, flag) = row?;
                vol += w * v;
                approx |= flag;
            }
            Ok((vol, approx))
        }
        _ => Err(Error::Dimension { expected: 2, got: n }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartDomain, FnField};
    use std::sync::Arc;

    fn flat(n: usize, b: Vec<f64>, scale: f64) -> MetricSpec {
        let field = FnField::new(
            n,
            move |_: &[f64]| DMatrix::identity(n, n) * (scale * scale),
            move |_: &[f64]| DVector::from_vec(b.clone()),
        );
        MetricSpec::new(
            Arc::new(field),
            ChartDomain::Box {
                lo: vec![-1.0; n],
                hi: vec![1.0; n],
            },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_values() {
        let m = flat(2, vec![0.0, 0.0], 1.0);
        let f = finsler_eval(&m, &PhiFamily::Randers, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((f - 5.0).abs() < 1e-15);
        let fd = fundamental(&m, &PhiFamily::Randers, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((fd.g.get(&[0, 0]) - 1.0).abs() < 1e-14);
        assert!(fd.g.get(&[0, 1]).abs() < 1e-14);
        assert!(fd.cartan.max_abs() < 1e-14);
        assert!(finsler_eval(&m, &PhiFamily::Randers, &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn randers_fundamental_against_finite_differences() {
        let m = flat(2, vec![0.5, 0.0], 1.0);
        let y = [1.0, 0.7];
        let fd = fundamental(&m, &PhiFamily::Randers, &[0.0, 0.0], &y).unwrap();
        let f2 = |u: f64, v: f64| ((u * u + v * v).sqrt() + 0.5 * u).powi(2);
        let (u, v) = (y[0], y[1]);
        let h = 1e-4;
        let g00 = (f2(u + h, v) - 2.0 * f2(u, v) + f2(u - h, v)) / (2.0 * h * h);
        let g11 = (f2(u, v + h) - 2.0 * f2(u, v) + f2(u, v - h)) / (2.0 * h * h);
        let g01 = (f2(u + h, v + h) - f2(u + h, v - h) - f2(u - h, v + h) + f2(u - h, v - h)) / (8.0 * h * h);
        assert!((fd.g.get(&[0, 0]) - g00).abs() < 1e-6);
        assert!((fd.g.get(&[1, 1]) - g11).abs() < 1e-6);
        assert!((fd.g.get(&[0, 1]) - g01).abs() < 1e-6);
        // C_011 = ¼ ∂_u ∂_v² F².
        let h = 1e-3;
        let d2v = |u: f64| (f2(u, v + h) - 2.0 * f2(u, v) + f2(u, v - h)) / (h * h);
        let c011 = (d2v(u + h) - d2v(u - h)) / (2.0 * h) / 4.0;
        assert!((fd.cartan.get(&[0, 1, 1]) - c011).abs() < 1e-5);
        assert!(fd.cartan.max_abs() > 0.01);
        for i in 0..2 {
            let cy: f64 = (0..2).map(|k| fd.cartan.get(&[i, 0, k]) * y[k]).sum();
            assert!(cy.abs() < 1e-12);
        }
    }

    #[test]
    fn riemann_sqrt_has_no_cartan_torsion() {
        let m = flat(3, vec![0.3, -0.2, 0.1], 1.2);
        let fd = fundamental(&m, &PhiFamily::RiemannSqrt { k: 1.5 }, &[0.0; 3], &[0.3, 1.0, -0.4]).unwrap();
        assert!(fd.cartan.max_abs() < 1e-9);
    }

    #[test]
    fn sigma_examples() {
        let x = [0.0, 0.0];
        let s = sigma_bh(&flat(2, vec![0.0, 0.0], 1.0), &PhiFamily::Randers, &x).unwrap();
        assert!((s.sigma - 1.0).abs() < 1e-12);
        let s = sigma_bh(&flat(2, vec![0.0, 0.0], 2.0), &PhiFamily::Randers, &x).unwrap();
        assert!((s.sigma - 4.0).abs() < 1e-11);
        // Offset-ellipse oracle: the Randers indicatrix |y| + ε y₁ = 1 is an ellipse
        // with semi-axes 1/(1−ε²) and 1/√(1−ε²), area π/(1−ε²)^{3/2}.
        let eps: f64 = 0.6;
        let oracle_area = std::f64::consts::PI / (1.0 - eps * eps).powf(1.5);
        let s = sigma_bh(&flat(2, vec![eps, 0.0], 1.0), &PhiFamily::Randers, &x).unwrap();
        assert!((s.sigma - std::f64::consts::PI / oracle_area).abs() < 1e-10);
        assert!((s.sigma - 0.512).abs() < 1e-10);
        assert!(!s.approximate);
        let s3 = sigma_bh(&flat(3, vec![0.0; 3], 1.0), &PhiFamily::Randers, &[0.0; 3]).unwrap();
        assert!((s3.sigma - 1.0).abs() < 1e-12);
        let s3 = sigma_bh(&flat(3, vec![0.5, 0.0, 0.0], 1.0), &PhiFamily::Randers, &[0.0; 3]).unwrap();
        assert!((s3.sigma - 0.75f64.powi(2)).abs() < 1e-10);
    }

    #[test]
    fn unicorn_sigma_is_flagged() {
        let m = flat(2, vec![1.0, 0.0], 1.0);
        let f = PhiFamily::unicorn(1.0, 0.0, 1.0, 1.0).unwrap();
        let s = sigma_bh(&m, &f, &[0.0, 0.0]).unwrap();
        assert!(s.approximate);
        assert!(s.sigma > 0.0);
    }
}
