//! Truncated multivariate Taylor jets.
//!
//! A [`JetScalar`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a
//! scalar field in `n_vars` direction variables, for every multi-index with
//! total degree `<= max_order`. Coefficients live in a dense table ordered by
//! total degree, so the table of a lower order is a prefix of the table of a
//! higher one and truncation is a slice.
//!
//! Elementary functions are applied by composing the function's univariate
//! Taylor series at the jet's value with the nilpotent part of the jet, which
//! is exact up to `max_order`.
//!
//! Base-point (chart) derivatives are not jetted; see [`base_derivative`].

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 8;
pub const MAX_VARS: usize = 9;

/// Guard for division and reciprocal.
pub const MIN_DENOMINATOR: f64 = 1e-300;

#[derive(Debug)]
struct Layout {
    n_vars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    /// `raise[v][i]` = index of monomial `i + e_v`, or `usize::MAX` when that
    /// exceeds the order.
    raise: Vec<Vec<usize>>,
}

impl Layout {
    fn build(n_vars: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        let mut degree = Vec::new();
        for d in 0..=order {
            let mut cur = vec![0u8; n_vars];
            push_graded(&mut monomials, &mut cur, 0, d);
            degree.extend(std::iter::repeat_n(d, monomials.len() - degree.len()));
        }
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let mut products = Vec::new();
        for i in 0..monomials.len() {
            for j in 0..monomials.len() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = monomials[i]
                    .iter()
                    .zip(&monomials[j])
                    .map(|(a, b)| a + b)
                    .collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let raise = (0..n_vars)
            .map(|v| {
                monomials
                    .iter()
                    .map(|m| {
                        let mut up = m.clone();
                        up[v] += 1;
                        index.get(&up).copied().unwrap_or(usize::MAX)
                    })
                    .collect()
            })
            .collect();

        Layout {
            n_vars,
            order,
            monomials,
            degree,
            index,
            products,
            raise,
        }
    }

    fn len(&self) -> usize {
        self.monomials.len()
    }
}

// Monomials of exact degree `remaining` over variables `var..`, lexicographic
// with the first variable's exponent descending.
fn push_graded(out: &mut Vec<Vec<u8>>, cur: &mut [u8], var: usize, remaining: usize) {
    if var + 1 == cur.len() {
        cur[var] = remaining as u8;
        out.push(cur.to_vec());
        cur[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[var] = e as u8;
        push_graded(out, cur, var + 1, remaining - e);
    }
    cur[var] = 0;
}

thread_local! {
    static LAYOUTS: RefCell<HashMap<(usize, usize), Arc<Layout>>> = RefCell::new(HashMap::new());
}

fn layout(n_vars: usize, order: usize) -> Result<Arc<Layout>> {
    if n_vars == 0 || n_vars > MAX_VARS {
        return Err(Error::JetShape(format!(
            "n_vars = {n_vars} outside 1..={MAX_VARS}"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::JetShape(format!(
            "max_order = {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok(LAYOUTS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n_vars, order))
            .or_insert_with(|| Arc::new(Layout::build(n_vars, order)))
            .clone()
    }))
}

/// Truncated Taylor expansion of a scalar in `n_vars` variables.
#[derive(Clone)]
pub struct JetScalar {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetScalar")
            .field("n_vars", &self.layout.n_vars)
            .field("max_order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for JetScalar {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl JetScalar {
    pub fn constant(value: f64, n_vars: usize, max_order: usize) -> Result<Self> {
        let layout = layout(n_vars, max_order)?;
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Ok(JetScalar { layout, coeffs })
    }

    /// The coordinate function `y^index` expanded about `point_value`.
    pub fn variable(index: usize, point_value: f64, n_vars: usize, max_order: usize) -> Result<Self> {
        if index >= n_vars {
            return Err(Error::IndexOutOfRange { index, len: n_vars });
        }
        let mut jet = Self::constant(point_value, n_vars, max_order)?;
        if max_order > 0 {
            let mut e = vec![0u8; n_vars];
            e[index] = 1;
            let slot = jet.layout.index[&e];
            jet.coeffs[slot] = 1.0;
        }
        Ok(jet)
    }

    /// One jet variable per component of `point`.
    pub fn variables(point: &[f64], max_order: usize) -> Result<Vec<Self>> {
        (0..point.len())
            .map(|i| Self::variable(i, point[i], point.len(), max_order))
            .collect()
    }

    pub fn from_coeffs(coeffs: Vec<f64>, n_vars: usize, max_order: usize) -> Result<Self> {
        let layout = layout(n_vars, max_order)?;
        if coeffs.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                got: coeffs.len(),
            });
        }
        Ok(JetScalar { layout, coeffs })
    }

    /// A constant with this jet's shape.
    pub fn lift(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        JetScalar {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn n_vars(&self) -> usize {
        self.layout.n_vars
    }

    pub fn max_order(&self) -> usize {
        self.layout.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of stored coefficients for a given shape.
    pub fn coeff_count(n_vars: usize, max_order: usize) -> Result<usize> {
        Ok(layout(n_vars, max_order)?.len())
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u8]> {
        self.layout.monomials.iter().map(|m| m.as_slice())
    }

    /// Taylor coefficient of a multi-index (zero above the truncation order).
    pub fn coeff(&self, multi: &[u8]) -> f64 {
        if multi.len() != self.layout.n_vars {
            return 0.0;
        }
        self.layout
            .index
            .get(multi)
            .map(|&i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    /// Partial derivative `∂^α f` at the expansion point (`α! · c_α`).
    pub fn partial(&self, multi: &[u8]) -> f64 {
        let fact: f64 = multi.iter().map(|&k| factorial(k as usize)).product();
        fact * self.coeff(multi)
    }

    /// Partial derivative with respect to the listed variables (repeats allowed).
    pub fn partial_of(&self, vars: &[usize]) -> f64 {
        let mut multi = vec![0u8; self.layout.n_vars];
        for &v in vars {
            multi[v] += 1;
        }
        self.partial(&multi)
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.layout.n_vars == other.layout.n_vars && self.layout.order == other.layout.order
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::JetMismatch {
                lhs_vars: self.layout.n_vars,
                lhs_order: self.layout.order,
                rhs_vars: other.layout.n_vars,
                rhs_order: other.layout.order,
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let value = self.value() / other.value();
        Ok(self.mul_unchecked(&other.recip()?).with_value(value))
    }

    fn with_value(mut self, value: f64) -> Self {
        self.coeffs[0] = value;
        self
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        JetScalar {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        JetScalar {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|&a| op(a)).collect(),
        }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, t) in &self.layout.products {
            out[t as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        JetScalar {
            layout: self.layout.clone(),
            coeffs: out,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|a| a * k)
    }

    /// Evaluates `Σ_k series[k] (self − self.value())^k`, i.e. composes a
    /// univariate Taylor series expanded at `self.value()` with this jet.
    pub fn compose_series(&self, series: &[f64]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let top = series.len().min(self.layout.order + 1);
        if top == 0 {
            return self.lift(0.0);
        }
        let mut acc = self.lift(series[top - 1]);
        for k in (0..top - 1).rev() {
            acc = acc.mul_unchecked(&delta);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    /// Exact derivative with respect to variable `var`; the result has order `max_order − 1`.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if var >= self.layout.n_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: self.layout.n_vars,
            });
        }
        if self.layout.order == 0 {
            return Err(Error::JetShape("cannot differentiate an order-0 jet".into()));
        }
        let target = layout(self.layout.n_vars, self.layout.order - 1)?;
        let coeffs = (0..target.len())
            .map(|i| {
                let up = self.layout.raise[var][i];
                (self.layout.monomials[i][var] as f64 + 1.0) * self.coeffs[up]
            })
            .collect();
        Ok(JetScalar {
            layout: target,
            coeffs,
        })
    }

    pub fn truncate(&self, max_order: usize) -> Result<Self> {
        if max_order > self.layout.order {
            return Err(Error::JetShape(format!(
                "cannot truncate order {} up to {max_order}",
                self.layout.order
            )));
        }
        let target = layout(self.layout.n_vars, max_order)?;
        let len = target.len();
        Ok(JetScalar {
            layout: target,
            coeffs: self.coeffs[..len].to_vec(),
        })
    }

    /// True when every non-constant coefficient is zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient of total degree `> degree`.
    pub fn tail_norm(&self, degree: usize) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.layout.degree)
            .filter(|(_, &d)| d > degree)
            .fold(0.0, |m, (c, _)| m.max(c.abs()))
    }

    pub fn recip(&self) -> Result<Self> {
        let u0 = self.value();
        if u0.abs() <= MIN_DENOMINATOR {
            return Err(Error::Domain(format!("division by {u0:e}")));
        }
        Ok(self.compose_series(&series_recip(u0, self.layout.order)))
    }

    pub fn exp(&self) -> Self {
        self.compose_series(&series_exp(self.value(), self.layout.order))
    }

    pub fn ln(&self) -> Result<Self> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Domain(format!("log of {u0}")));
        }
        Ok(self.compose_series(&series_ln(u0, self.layout.order)))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Domain(format!("sqrt of {u0}")));
        }
        Ok(self.compose_series(&series_pow(u0, 0.5, self.layout.order)))
    }

    /// Real power `u^p` for `u > 0`.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Domain(format!("{u0}^{p} with non-positive base")));
        }
        Ok(self.compose_series(&series_pow(u0, p, self.layout.order)))
    }

    /// Integer power by repeated multiplication (exact on polynomials).
    pub fn powi(&self, k: i32) -> Result<Self> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.lift(1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        Ok(acc.with_value(self.value().powi(k)))
    }

    pub fn sin(&self) -> Self {
        self.compose_series(&series_sin(self.value(), self.layout.order))
    }

    pub fn cos(&self) -> Self {
        self.compose_series(&series_cos(self.value(), self.layout.order))
    }

    pub fn atan(&self) -> Self {
        self.compose_series(&series_atan(self.value(), self.layout.order))
    }

    pub fn abs(&self) -> Result<Self> {
        let u0 = self.value();
        if u0 == 0.0 && self.layout.order > 0 {
            return Err(Error::Domain("abs is not differentiable at 0".into()));
        }
        Ok(if u0 < 0.0 { -self } else { self.clone() })
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn series_exp(u0: f64, order: usize) -> Vec<f64> {
    let e = u0.exp();
    (0..=order).map(|k| e / factorial(k)).collect()
}

fn series_ln(u0: f64, order: usize) -> Vec<f64> {
    let mut out = vec![u0.ln()];
    for k in 1..=order {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out.push(sign / (k as f64 * u0.powi(k as i32)));
    }
    out
}

fn series_recip(u0: f64, order: usize) -> Vec<f64> {
    let r = 1.0 / u0;
    let mut out = Vec::with_capacity(order + 1);
    let mut term = r;
    for _ in 0..=order {
        out.push(term);
        term *= -r;
    }
    out
}

// Binomial series of u^p about u0 > 0.
fn series_pow(u0: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    let base = u0.powf(p);
    for k in 0..=order {
        out.push(base * binom / u0.powi(k as i32));
        binom *= (p - k as f64) / (k as f64 + 1.0);
    }
    out
}

fn series_sin(u0: f64, order: usize) -> Vec<f64> {
    let (s, c) = u0.sin_cos();
    let cycle = [s, c, -s, -c];
    (0..=order).map(|k| cycle[k % 4] / factorial(k)).collect()
}

fn series_cos(u0: f64, order: usize) -> Vec<f64> {
    let (s, c) = u0.sin_cos();
    let cycle = [c, -s, -c, s];
    (0..=order).map(|k| cycle[k % 4] / factorial(k)).collect()
}

// atan' = 1/(1+t²); integrate its series term by term.
fn series_atan(u0: f64, order: usize) -> Vec<f64> {
    let mut out = vec![u0.atan()];
    if order == 0 {
        return out;
    }
    let t = JetScalar::variable(0, u0, 1, order - 1).expect("univariate layout");
    let w = (&t * &t + 1.0).recip().expect("1 + t^2 > 0");
    for k in 1..=order {
        out.push(w.coeffs[k - 1] / k as f64);
    }
    out
}

impl Add for &JetScalar {
    type Output = JetScalar;
    fn add(self, rhs: &JetScalar) -> JetScalar {
        self.try_add(rhs).expect("jet shape mismatch")
    }
}

impl Sub for &JetScalar {
    type Output = JetScalar;
    fn sub(self, rhs: &JetScalar) -> JetScalar {
        self.try_sub(rhs).expect("jet shape mismatch")
    }
}

impl Mul for &JetScalar {
    type Output = JetScalar;
    fn mul(self, rhs: &JetScalar) -> JetScalar {
        self.try_mul(rhs).expect("jet shape mismatch")
    }
}

impl Div for &JetScalar {
    type Output = JetScalar;
    fn div(self, rhs: &JetScalar) -> JetScalar {
        self.try_div(rhs).expect("jet division")
    }
}

impl Neg for &JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        self.map(|a| -a)
    }
}

impl Add<f64> for &JetScalar {
    type Output = JetScalar;
    fn add(self, rhs: f64) -> JetScalar {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Sub<f64> for &JetScalar {
    type Output = JetScalar;
    fn sub(self, rhs: f64) -> JetScalar {
        self + (-rhs)
    }
}

impl Mul<f64> for &JetScalar {
    type Output = JetScalar;
    fn mul(self, rhs: f64) -> JetScalar {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: JetScalar) -> JetScalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&JetScalar> for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: &JetScalar) -> JetScalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<JetScalar> for &JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: JetScalar) -> JetScalar {
                self.$method(&rhs)
            }
        }
        impl $tr<f64> for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: f64) -> JetScalar {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Div<f64> for &JetScalar {
    type Output = JetScalar;
    fn div(self, rhs: f64) -> JetScalar {
        self.scale(1.0 / rhs)
    }
}

impl Neg for JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        -&self
    }
}

/// Elementary-function tags accepted by [`jet_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemFn {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Atan,
    Neg,
}

impl ElemFn {
    pub fn arity(self) -> usize {
        match self {
            ElemFn::Add | ElemFn::Sub | ElemFn::Mul | ElemFn::Div | ElemFn::Pow => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Add => "add",
            ElemFn::Sub => "sub",
            ElemFn::Mul => "mul",
            ElemFn::Div => "div",
            ElemFn::Pow => "pow",
            ElemFn::Sqrt => "sqrt",
            ElemFn::Exp => "exp",
            ElemFn::Log => "log",
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
            ElemFn::Atan => "atan",
            ElemFn::Neg => "neg",
        }
    }
}

/// Applies an elementary function to jets, checking arity, shapes and domains.
pub fn jet_apply(tag: ElemFn, args: &[JetScalar]) -> Result<JetScalar> {
    if args.len() != tag.arity() {
        return Err(Error::Arity {
            tag: tag.name(),
            expected: tag.arity(),
            got: args.len(),
        });
    }
    let a = &args[0];
    match tag {
        ElemFn::Add => a.try_add(&args[1]),
        ElemFn::Sub => a.try_sub(&args[1]),
        ElemFn::Mul => a.try_mul(&args[1]),
        ElemFn::Div => a.try_div(&args[1]),
        ElemFn::Pow => jet_pow(a, &args[1]),
        ElemFn::Sqrt => a.sqrt(),
        ElemFn::Exp => Ok(a.exp()),
        ElemFn::Log => a.ln(),
        ElemFn::Sin => Ok(a.sin()),
        ElemFn::Cos => Ok(a.cos()),
        ElemFn::Atan => Ok(a.atan()),
        ElemFn::Neg => Ok(-a),
    }
}

/// `base^exponent`: integer constant exponents multiply, anything else goes
/// through `exp(e · ln base)`.
pub fn jet_pow(base: &JetScalar, exponent: &JetScalar) -> Result<JetScalar> {
    base.check_shape(exponent)?;
    let e = exponent.value();
    if exponent.is_constant() {
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            return base.powi(e as i32);
        }
        return base.powf(e);
    }
    let value = base.value().powf(e);
    Ok((exponent * &base.ln()?).exp().with_value(value))
}

/// Step used by [`base_derivative`] along an axis.
pub fn default_step(x_axis: f64) -> f64 {
    1e-3 * x_axis.abs().max(1.0)
}

/// Central difference of `field` along `axis` with one Richardson step.
///
/// Order 1 is fourth-order accurate; order 2 uses the three-point second
/// difference, extrapolated the same way.
pub fn base_derivative<F>(field: F, x: &[f64], axis: usize, order: u8) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let v = base_derivative_vec(|p| field(p).map(|f| vec![f]), x, axis, order)?;
    Ok(v[0])
}

/// Componentwise [`base_derivative`] of a vector-valued field.
pub fn base_derivative_vec<F>(field: F, x: &[f64], axis: usize, order: u8) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if axis >= x.len() {
        return Err(Error::IndexOutOfRange {
            index: axis,
            len: x.len(),
        });
    }
    let h = default_step(x[axis]);
    let eval = |offset: f64| -> Result<Vec<f64>> {
        let mut p = x.to_vec();
        p[axis] += offset;
        field(&p).map_err(|e| Error::Evaluation(format!("stencil point {p:?}: {e}")))
    };
    let fp = eval(h)?;
    let fm = eval(-h)?;
    let fp2 = eval(0.5 * h)?;
    let fm2 = eval(-0.5 * h)?;
    let out = match order {
        1 => fp
            .iter()
            .zip(&fm)
            .zip(fp2.iter().zip(&fm2))
            .map(|((&a, &b), (&c, &d))| {
                let coarse = (a - b) / (2.0 * h);
                let fine = (c - d) / h;
                (4.0 * fine - coarse) / 3.0
            })
            .collect(),
        2 => {
            let f0 = eval(0.0)?;
            let hh = 0.25 * h * h;
            (0..f0.len())
                .map(|i| {
                    let coarse = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
                    let fine = (fp2[i] - 2.0 * f0[i] + fm2[i]) / hh;
                    (4.0 * fine - coarse) / 3.0
                })
                .collect()
        }
        _ => {
            return Err(Error::Domain(format!(
                "base_derivative supports order 1 or 2, got {order}"
            )))
        }
    };
    Ok(out)
}

/// Gradient of a scalar field (one [`base_derivative`] per axis).
pub fn base_gradient<F>(field: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    (0..x.len())
        .map(|axis| base_derivative(&field, x, axis, 1))
        .collect()
}
