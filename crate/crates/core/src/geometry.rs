//! The Riemannian side of an (α,β) pair: metric and one-form evaluation,
//! Christoffel symbols, the covariant derivative `b_{i;j}` and its
//! symmetric/antisymmetric calculus.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprparse::{indexed_names, Expr};
use crate::jets::{base_derivative_vec, base_gradient, default_step};
use crate::tensor::Tensor;

/// Pointwise evaluators for `a_ij(x)` and `b_i(x)`.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn a(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    fn b(&self, x: &[f64]) -> Result<DVector<f64>>;
}

/// A [`MetricField`] backed by two closures.
pub struct FnField<A, B> {
    n: usize,
    a: A,
    b: B,
}

impl<A, B> FnField<A, B>
where
    A: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
    B: Fn(&[f64]) -> DVector<f64> + Send + Sync,
{
    pub fn new(n: usize, a: A, b: B) -> Self {
        FnField { n, a, b }
    }
}

impl<A, B> MetricField for FnField<A, B>
where
    A: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
    B: Fn(&[f64]) -> DVector<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn a(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.n, x)?;
        let a = (self.a)(x);
        finite_matrix(&a, x)?;
        Ok(a)
    }

    fn b(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.n, x)?;
        let b = (self.b)(x);
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("non-finite one-form at {x:?}")));
        }
        Ok(b)
    }
}

fn check_dim(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

fn finite_matrix(a: &DMatrix<f64>, x: &[f64]) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite metric at {x:?}")));
    }
    Ok(())
}

/// A metric given by expression strings in `x1..xn` and parameters `p1..p9`.
pub struct ExprField {
    n: usize,
    a: Vec<Vec<Expr>>,
    b: Vec<Expr>,
    params: Vec<f64>,
}

impl ExprField {
    /// `a` is the full `n × n` matrix of expressions; it is symmetrized on evaluation.
    pub fn parse(a: &[Vec<String>], b: &[String], params: &[f64]) -> Result<Self> {
        let n = b.len();
        if n == 0 || a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            });
        }
        if params.len() > 9 {
            return Err(Error::DimensionMismatch {
                expected: 9,
                got: params.len(),
            });
        }
        let names = Self::names(n, params.len());
        let allowed: Vec<&str> = names.iter().map(String::as_str).collect();
        let a = a
            .iter()
            .map(|row| row.iter().map(|s| Expr::parse(s, &allowed)).collect())
            .collect::<Result<Vec<Vec<Expr>>>>()?;
        let b = b
            .iter()
            .map(|s| Expr::parse(s, &allowed))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExprField {
            n,
            a,
            b,
            params: params.to_vec(),
        })
    }

    fn names(n: usize, n_params: usize) -> Vec<String> {
        let mut names = indexed_names("x", n);
        names.extend(indexed_names("p", n_params));
        names
    }

    fn bindings<'a>(&self, names: &'a [String], x: &[f64]) -> Vec<(&'a str, f64)> {
        names
            .iter()
            .map(String::as_str)
            .zip(x.iter().chain(&self.params).copied())
            .collect()
    }
}

impl MetricField for ExprField {
    fn dim(&self) -> usize {
        self.n
    }

    fn a(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.n, x)?;
        let names = Self::names(self.n, self.params.len());
        let bind = self.bindings(&names, x);
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                a[(i, j)] = self.a[i][j].eval_real(&bind)?;
            }
        }
        Ok((&a + a.transpose()) * 0.5)
    }

    fn b(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.n, x)?;
        let names = Self::names(self.n, self.params.len());
        let bind = self.bindings(&names, x);
        let v = self
            .b
            .iter()
            .map(|e| e.eval_real(&bind))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }
}

/// Region of the chart where the metric is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartDomain {
    /// Axis-aligned box `lo ≤ x ≤ hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open ball `|x − center| < radius`.
    Disc { center: Vec<f64>, radius: f64 },
}

impl ChartDomain {
    pub fn dim(&self) -> usize {
        match self {
            ChartDomain::Box { lo, .. } => lo.len(),
            ChartDomain::Disc { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ChartDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h),
            ChartDomain::Disc { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < radius * radius
            }
        }
    }

    /// Stencil margin `4 h₀` for the largest coordinate magnitude in the domain.
    pub fn margin(&self) -> f64 {
        let scale = match self {
            ChartDomain::Box { lo, hi } => lo.iter().chain(hi).fold(0.0_f64, |m, v| m.max(v.abs())),
            ChartDomain::Disc { center, radius } => {
                center.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + radius
            }
        };
        4.0 * default_step(scale)
    }
}

/// Chart dimension, metric evaluators, domain and regularity margin δ.
#[derive(Clone)]
pub struct MetricSpec {
    pub n: usize,
    pub field: Arc<dyn MetricField>,
    pub domain: ChartDomain,
    pub delta: f64,
}

impl fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpec")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("delta", &self.delta)
            .finish()
    }
}

pub const DEFAULT_DELTA: f64 = 0.05;

impl MetricSpec {
    pub fn new(field: Arc<dyn MetricField>, domain: ChartDomain) -> Result<Self> {
        let n = field.dim();
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: domain.dim(),
            });
        }
        Ok(MetricSpec {
            n,
            field,
            domain,
            delta: DEFAULT_DELTA,
        })
    }

    pub fn a(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.field.a(x)
    }

    pub fn b(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.field.b(x)
    }

    /// `a_ij(x)` together with its inverse; fails unless positive definite.
    pub fn a_and_inverse(&self, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let a = self.a(x)?;
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
        Ok((a, chol.inverse()))
    }

    /// `‖β‖_α(x)`.
    pub fn b_norm(&self, x: &[f64]) -> Result<f64> {
        let (_, ainv) = self.a_and_inverse(x)?;
        let b = self.b(x)?;
        Ok(b.dot(&(&ainv * &b)).max(0.0).sqrt())
    }

    /// `α(x, y)` and `β(x, y)`.
    pub fn alpha_beta(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.n, y)?;
        let a = self.a(x)?;
        let b = self.b(x)?;
        let yv = DVector::from_column_slice(y);
        let a2 = yv.dot(&(&a * &yv));
        Ok((a2.max(0.0).sqrt(), b.dot(&yv)))
    }
}

/// First x-derivatives of `a_ij`: `da[m][(i, j)] = ∂_m a_ij`.
pub fn metric_derivatives(m: &MetricSpec, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = m.n;
    (0..n)
        .map(|axis| {
            let flat = base_derivative_vec(
                |p| m.a(p).map(|a| a.as_slice().to_vec()),
                x,
                axis,
                1,
            )?;
            Ok(DMatrix::from_vec(n, n, flat))
        })
        .collect()
}

/// `γ^i_jk = ½ a^{im}(∂_j a_mk + ∂_k a_mj − ∂_m a_jk)`, stored as `[i, j, k]`.
pub fn christoffels(m: &MetricSpec, x: &[f64]) -> Result<Tensor> {
    let (_, ainv) = m.a_and_inverse(x)?;
    let da = metric_derivatives(m, x)?;
    Ok(christoffels_from(&ainv, &da))
}

fn christoffels_from(ainv: &DMatrix<f64>, da: &[DMatrix<f64>]) -> Tensor {
    let n = ainv.nrows();
    let mut lower = Tensor::zeros(n, 3);
    for mm in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = 0.5 * (da[j][(mm, k)] + da[k][(mm, j)] - da[mm][(j, k)]);
                lower.set(&[mm, j, k], v);
                lower.set(&[mm, k, j], v);
            }
        }
    }
    Tensor::from_fn(n, 3, |idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        (0..n).map(|mm| ainv[(i, mm)] * lower.get(&[mm, j, k])).sum()
    })
}

/// Covariant-derivative calculus of β at a chart point.
#[derive(Debug, Clone)]
pub struct BetaCalculus {
    pub n: usize,
    pub x: Vec<f64>,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub b_lower: DVector<f64>,
    pub b_upper: DVector<f64>,
    pub b_norm: f64,
    pub gamma: Tensor,
    /// `b_{i;j}` at `(i, j)`.
    pub b_cov: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r_i: DVector<f64>,
    pub s_i: DVector<f64>,
    /// `s^i_j` at `(i, j)`.
    pub s_up: DMatrix<f64>,
}

/// Directional contractions of [`BetaCalculus`] with `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaContractions {
    pub r00: f64,
    pub r0: f64,
    pub s0: f64,
    pub r_i0: Vec<f64>,
    pub s_i0: Vec<f64>,
    pub s_up0: Vec<f64>,
}

pub fn beta_derivatives(m: &MetricSpec, x: &[f64]) -> Result<BetaCalculus> {
    let n = m.n;
    let (a, a_inv) = m.a_and_inverse(x)?;
    let da = metric_derivatives(m, x)?;
    let gamma = christoffels_from(&a_inv, &da);
    let b_lower = m.b(x)?;
    let db: Vec<Vec<f64>> = (0..n)
        .map(|axis| base_derivative_vec(|p| m.b(p).map(|b| b.as_slice().to_vec()), x, axis, 1))
        .collect::<Result<_>>()?;
    let b_cov = DMatrix::from_fn(n, n, |i, j| {
        db[j][i] - (0..n).map(|k| b_lower[k] * gamma.get(&[k, i, j])).sum::<f64>()
    });
    let r = (&b_cov + b_cov.transpose()) * 0.5;
    let s = (&b_cov - b_cov.transpose()) * 0.5;
    let b_upper = &a_inv * &b_lower;
    let r_i = r.transpose() * &b_upper;
    let s_i = s.transpose() * &b_upper;
    let s_up = &a_inv * &s;
    let b_norm = b_lower.dot(&b_upper).max(0.0).sqrt();
    Ok(BetaCalculus {
        n,
        x: x.to_vec(),
        a,
        a_inv,
        b_lower,
        b_upper,
        b_norm,
        gamma,
        b_cov,
        r,
        s,
        r_i,
        s_i,
        s_up,
    })
}

pub fn beta_contractions(bc: &BetaCalculus, y: &[f64]) -> Result<BetaContractions> {
    check_dim(bc.n, y)?;
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let yv = DVector::from_column_slice(y);
    let r_i0 = &bc.r * &yv;
    let s_i0 = &bc.s * &yv;
    let s_up0 = &bc.s_up * &yv;
    Ok(BetaContractions {
        r00: yv.dot(&r_i0),
        r0: bc.r_i.dot(&yv),
        s0: bc.s_i.dot(&yv),
        r_i0: r_i0.as_slice().to_vec(),
        s_i0: s_i0.as_slice().to_vec(),
        s_up0: s_up0.as_slice().to_vec(),
    })
}

/// `∂b/∂x^i − (r_i + s_i)/b`, componentwise.
pub fn beta_norm_gradient_check(m: &MetricSpec, x: &[f64]) -> Result<Vec<f64>> {
    let bc = beta_derivatives(m, x)?;
    if bc.b_norm <= 1e-12 {
        return Err(Error::ZeroNorm(bc.b_norm));
    }
    let grad = base_gradient(|p| m.b_norm(p), x)?;
    Ok((0..m.n)
        .map(|i| grad[i] - (bc.r_i[i] + bc.s_i[i]) / bc.b_norm)
        .collect())
}

/// Max over `(i,j,k)` of `|∂_k a_ij − a_mj γ^m_ik − a_im γ^m_jk|`.
pub fn metric_compatibility_residual(m: &MetricSpec, x: &[f64]) -> Result<f64> {
    let n = m.n;
    let (a, ainv) = m.a_and_inverse(x)?;
    let da = metric_derivatives(m, x)?;
    let g = christoffels_from(&ainv, &da);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = da[k][(i, j)];
                for mm in 0..n {
                    v -= a[(mm, j)] * g.get(&[mm, i, k]) + a[(i, mm)] * g.get(&[mm, j, k]);
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Cholesky check of `a(x)` at every point.
pub fn check_positive_definite(m: &MetricSpec, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        m.a_and_inverse(p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid_randers(eps: f64) -> MetricSpec {
        let field = FnField::new(
            2,
            |_: &[f64]| DMatrix::identity(2, 2),
            move |_: &[f64]| DVector::from_vec(vec![eps, 0.0]),
        );
        MetricSpec::new(
            Arc::new(field),
            ChartDomain::Box {
                lo: vec![-1.0; 2],
                hi: vec![1.0; 2],
            },
        )
        .unwrap()
    }

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
    fn flat_metric_has_no_christoffels() {
        let g = christoffels(&euclid_randers(0.5), &[0.3, -0.2]).unwrap();
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn diagonal_metric_christoffels() {
        // a = diag(1, e^{2x}): γ¹₂₂ = −e^{2x}, γ²₁₂ = γ²₂₁ = 1, everything else 0.
        let x = [0.4, -0.7];
        let g = christoffels(&mw(), &x).unwrap();
        let e = (2.0 * x[0]).exp();
        for idx in g.indices() {
            let want = match idx.as_slice() {
                [0, 1, 1] => -e,
                [1, 0, 1] | [1, 1, 0] => 1.0,
                _ => 0.0,
            };
            assert!((g.get(&idx) - want).abs() < 1e-9, "{idx:?}");
        }
    }

    #[test]
    fn mw_r_and_s() {
        let bc = beta_derivatives(&mw(), &[0.0, 0.3]).unwrap();
        assert!(bc.s.amax() < 1e-10);
        let want = &bc.a * (bc.b_norm * bc.b_norm) - &bc.b_lower * bc.b_lower.transpose();
        assert!((&bc.r - want).amax() < 1e-10);
        assert!((bc.r[(1, 1)] - 1.0).abs() < 1e-10);
        let c = beta_contractions(&bc, &[0.0, 1.0]).unwrap();
        assert!((c.r00 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parallel_form_contractions_vanish() {
        let bc = beta_derivatives(&euclid_randers(0.5), &[0.1, 0.2]).unwrap();
        let c = beta_contractions(&bc, &[0.3, -1.0]).unwrap();
        for v in [c.r00, c.r0, c.s0] {
            assert!(v.abs() < 1e-12);
        }
        assert!(beta_contractions(&bc, &[0.0, 0.0]).is_err());
        assert!(beta_contractions(&bc, &[1.0]).is_err());
    }

    #[test]
    fn expression_field_matches_closure_field() {
        let f = ExprField::parse(
            &[
                vec!["1".into(), "0".into()],
                vec!["0".into(), "exp(2*x1)".into()],
            ],
            &["p1".into(), "0".into()],
            &[1.0],
        )
        .unwrap();
        let spec = MetricSpec::new(Arc::new(f), mw().domain.clone()).unwrap();
        let x = [0.3, 0.1];
        assert!((spec.a(&x).unwrap() - mw().a(&x).unwrap()).amax() < 1e-15);
        assert!(metric_compatibility_residual(&spec, &x).unwrap() < 1e-8);
    }

    #[test]
    fn singular_metric_is_reported() {
        let field = FnField::new(
            2,
            |_: &[f64]| DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            |_: &[f64]| DVector::zeros(2),
        );
        let spec = MetricSpec::new(Arc::new(field), mw().domain.clone()).unwrap();
        assert!(matches!(christoffels(&spec, &[0.0, 0.0]), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn disc_domain() {
        let d = ChartDomain::Disc {
            center: vec![0.0, 0.0],
            radius: 0.95_f64.sqrt(),
        };
        assert!(d.contains(&[0.6, 0.6]));
        assert!(!d.contains(&[0.7, 0.7]));
    }
}
