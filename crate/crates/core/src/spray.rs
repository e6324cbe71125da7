//! Spray coefficients `G^i(x, y)`.
//!
//! Two independent routes: the generic formula from `F²` and the (α,β)
//! assembly from γ, r, s and the scalars Q, Θ, Ψ. Both return y-jets so
//! that curvature code can take further fiber derivatives exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::{alpha_beta_jets, f2_jet_at};
use crate::geometry::{beta_derivatives, christoffels, MetricSpec};
use crate::jets::{base_derivative_vec, JetScalar};
use crate::phi::{ab_series, PhiFamily};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SprayRoute {
    /// `G^i = ¼ g^{il}[∂²F²/∂x^k∂y^l y^k − ∂F²/∂x^l]`.
    #[default]
    Generic,
    /// `G^i = G^i_α + αQ s^i_0 + (r_00 − 2Qα s_0)(Θ y^i/α + Ψ b^i)`.
    AlphaBeta,
}

/// `G^i_α = ½ γ^i_jk y^j y^k`.
pub fn spray_alpha(m: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let gamma = christoffels(m, x)?;
    Ok(spray_alpha_from(&gamma, y))
}

pub fn spray_alpha_from(gamma: &Tensor, y: &[f64]) -> Vec<f64> {
    let n = gamma.n;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += gamma.get(&[i, j, k]) * y[j] * y[k];
                }
            }
            0.5 * acc
        })
        .collect()
}

/// Inverse of a symmetric positive definite matrix of jets (Gauss–Jordan, no pivoting).
pub fn invert_jet_matrix(m: &[Vec<JetScalar>]) -> Result<Vec<Vec<JetScalar>>> {
    let n = m.len();
    let values = DMatrix::from_fn(n, n, |i, j| m[i][j].value());
    if values.cholesky().is_none() {
        return Err(Error::SingularG);
    }
    let zero = m[0][0].lift(0.0);
    let mut a: Vec<Vec<JetScalar>> = m.to_vec();
    let mut inv: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| (0..n).map(|j| zero.lift(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let pivot = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &pivot;
            inv[col][j] = &inv[col][j] * &pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col].clone();
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&factor * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
            }
        }
    }
    Ok(inv)
}

/// Generic-route spray as y-jets of the given order (at most 5).
pub fn spray_generic_jet(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64], order: usize) -> Result<Vec<JetScalar>> {
    let n = m.n;
    let p = f2_jet_at(m, f, x, y, order + 2)?;
    let dx: Vec<JetScalar> = (0..n)
        .map(|axis| {
            let flat = base_derivative_vec(
                |q| f2_jet_at(m, f, q, y, order + 1).map(|j| j.coeffs().to_vec()),
                x,
                axis,
                1,
            )?;
            JetScalar::from_coeffs(flat, n, order + 1)
        })
        .collect::<Result<_>>()?;
    let first: Vec<JetScalar> = (0..n).map(|i| p.derivative(i)).collect::<Result<_>>()?;
    let g: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| (0..n).map(|l| first[i].derivative(l).map(|j| j.scale(0.5))).collect())
        .collect::<Result<_>>()?;
    let g_inv = invert_jet_matrix(&g)?;
    let yv = JetScalar::variables(y, order)?;
    let bracket: Vec<JetScalar> = (0..n)
        .map(|l| {
            let mut acc = dx[l].truncate(order)?.scale(-1.0);
            for k in 0..n {
                acc = &acc + &(&dx[k].derivative(l)? * &yv[k]);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok((0..n)
        .map(|i| {
            let mut acc = yv[0].lift(0.0);
            for l in 0..n {
                acc = &acc + &(&g_inv[i][l] * &bracket[l]);
            }
            acc.scale(0.25)
        })
        .collect())
}

/// (α,β)-route spray as y-jets of the given order (at most 5).
pub fn spray_ab_jet(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64], order: usize) -> Result<Vec<JetScalar>> {
    let n = m.n;
    let bc = beta_derivatives(m, x)?;
    let yv = JetScalar::variables(y, order)?;
    let (alpha2, beta) = alpha_beta_jets(&bc.a, &bc.b_lower, &yv);
    if alpha2.value() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let alpha = alpha2.sqrt()?;
    let s = beta.try_div(&alpha)?;
    let ser = ab_series(f, bc.b_norm, s.value(), n, order)?;
    let q = s.compose_series(&ser.q);
    let theta = s.compose_series(&ser.theta);
    let psi = s.compose_series(&ser.psi);

    let zero = yv[0].lift(0.0);
    let mut r00 = zero.clone();
    let mut s0 = zero.clone();
    for i in 0..n {
        s0 = &s0 + &yv[i].scale(bc.s_i[i]);
        for j in 0..n {
            r00 = &r00 + &(&yv[i] * &yv[j]).scale(bc.r[(i, j)]);
        }
    }
    let alpha_q = &alpha * &q;
    let common = &r00 - &(&alpha_q * &s0).scale(2.0);
    let theta_over_alpha = theta.try_div(&alpha)?;
    Ok((0..n)
        .map(|i| {
            let mut g_alpha = zero.clone();
            let mut s_up0 = zero.clone();
            for j in 0..n {
                s_up0 = &s_up0 + &yv[j].scale(bc.s_up[(i, j)]);
                for k in 0..n {
                    g_alpha = &g_alpha + &(&yv[j] * &yv[k]).scale(0.5 * bc.gamma.get(&[i, j, k]));
                }
            }
            let tail = &(&theta_over_alpha * &yv[i]) + &psi.scale(bc.b_upper[i]);
            &(&g_alpha + &(&alpha_q * &s_up0)) + &(&common * &tail)
        })
        .collect())
}

pub fn spray_jet(
    m: &MetricSpec,
    f: &PhiFamily,
    route: SprayRoute,
    x: &[f64],
    y: &[f64],
    order: usize,
) -> Result<Vec<JetScalar>> {
    match route {
        SprayRoute::Generic => spray_generic_jet(m, f, x, y, order),
        SprayRoute::AlphaBeta => spray_ab_jet(m, f, x, y, order),
    }
}

pub fn spray_generic(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(spray_generic_jet(m, f, x, y, 0)?.iter().map(JetScalar::value).collect())
}

pub fn spray_ab(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(spray_ab_jet(m, f, x, y, 0)?.iter().map(JetScalar::value).collect())
}

/// Spray values with first and second fiber derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SprayData {
    pub g: Vec<f64>,
    pub g_alpha: Vec<f64>,
    /// `N^i_j = ∂G^i/∂y^j`.
    pub nonlinear: Tensor,
    /// `G^i_jk = ∂²G^i/∂y^j∂y^k`.
    pub connection: Tensor,
}

pub fn spray_data(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<SprayData> {
    let jets = spray_jet(m, f, route, x, y, 2)?;
    let n = m.n;
    Ok(SprayData {
        g: jets.iter().map(JetScalar::value).collect(),
        g_alpha: spray_alpha(m, x, y)?,
        nonlinear: Tensor::from_fn(n, 2, |i| jets[i[0]].partial_of(&[i[1]])),
        connection: Tensor::from_fn(n, 3, |i| jets[i[0]].partial_of(&i[1..])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartDomain, FnField};
    use nalgebra::DVector;
    use std::sync::Arc;

    fn mw() -> MetricSpec {
        let field = FnField::new(
            2,
            |x: &[f64]| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, (2.0 * x[0]).exp()])),
            |_: &[f64]| DVector::from_vec(vec![1.0, 0.0]),
        );
        MetricSpec::new(
            Arc::new(field),
            ChartDomain::Box {
                lo: vec![-2.0; 2],
                hi: vec![2.0; 2],
            },
        )
        .unwrap()
    }

    #[test]
    fn mw_alpha_spray() {
        let g = spray_alpha(&mw(), &[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-9);
        assert!(g[1].abs() < 1e-9);
        // Riemannian F = α: φ ≡ 1 through a custom expression.
        let one = PhiFamily::custom("1 + 0*s", &[]).unwrap();
        let gg = spray_generic(&mw(), &one, &[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((gg[0] + 0.5).abs() < 1e-7);
    }

    #[test]
    fn routes_agree_on_riemann_sqrt() {
        let f = PhiFamily::RiemannSqrt { k: 1.0 };
        let x = [0.2, -0.3];
        let y = [0.4, 0.9];
        let a = spray_ab_jet(&mw(), &f, &x, &y, 3).unwrap();
        let b = spray_generic_jet(&mw(), &f, &x, &y, 3).unwrap();
        for i in 0..2 {
            for (u, v) in a[i].coeffs().iter().zip(b[i].coeffs()) {
                assert!((u - v).abs() < 1e-7 * u.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn jet_matrix_inverse() {
        let v = JetScalar::variables(&[1.0, 2.0], 2).unwrap();
        let m = vec![
            vec![&(&v[0] * &v[0]) + 1.0, v[1].scale(0.1)],
            vec![v[1].scale(0.1), &v[1] + 3.0],
        ];
        let inv = invert_jet_matrix(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = v[0].lift(0.0);
                for k in 0..2 {
                    acc = &acc + &(&m[i][k] * &inv[k][j]);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc.value() - want).abs() < 1e-14);
                assert!(acc.tail_norm(0) < 1e-13);
            }
        }
    }
}
