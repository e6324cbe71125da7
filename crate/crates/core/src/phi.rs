//! The φ(s) families and the scalar functions Q, Δ, Θ, Φ, Ψ of (α,β)-metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprparse::{indexed_names, Expr};
use crate::geometry::DEFAULT_DELTA;
use crate::jets::{factorial, JetScalar, MAX_ORDER};
use crate::quad::adaptive_simpson;

/// Guard for `φ − sφ′` and `Δ`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PhiFamily {
    /// `φ = 1 + s`.
    Randers,
    /// `φ = √(1 + k s²)`.
    RiemannSqrt { k: f64 },
    /// `φ = c·exp ∫₀^s g`, `g(t) = (kt + q√(b₀²−t²)) / (1 + kt² + qt√(b₀²−t²))`.
    Unicorn { b0: f64, k: f64, q: f64, c: f64 },
    /// User expression in `s` and `p1..p9`.
    Custom { expr: Expr, params: Vec<f64> },
}

impl fmt::Display for PhiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiFamily::Randers => write!(f, "randers"),
            PhiFamily::RiemannSqrt { k } => write!(f, "riemann_sqrt(k={k})"),
            PhiFamily::Unicorn { b0, k, q, c } => write!(f, "unicorn(b0={b0}, k={k}, q={q}, c={c})"),
            PhiFamily::Custom { expr, .. } => write!(f, "custom({expr})"),
        }
    }
}

/// Serializable description of a [`PhiFamily`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Randers,
    RiemannSqrt {
        k: f64,
    },
    Unicorn {
        b0: f64,
        k: f64,
        q: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Custom {
        expr: String,
        #[serde(default)]
        params: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl PhiConfig {
    pub fn build(&self) -> Result<PhiFamily> {
        match self {
            PhiConfig::Randers => Ok(PhiFamily::Randers),
            PhiConfig::RiemannSqrt { k } => Ok(PhiFamily::RiemannSqrt { k: *k }),
            PhiConfig::Unicorn { b0, k, q, c } => PhiFamily::unicorn(*b0, *k, *q, *c),
            PhiConfig::Custom { expr, params } => PhiFamily::custom(expr, params),
        }
    }
}

impl PhiFamily {
    pub fn unicorn(b0: f64, k: f64, q: f64, c: f64) -> Result<Self> {
        for (name, v) in [("b0", b0), ("q", q), ("c", c)] {
            if v.is_nan() || v <= 0.0 || !v.is_finite() {
                return Err(Error::ParamOutOfRange {
                    name: name.into(),
                    value: v,
                    range: "> 0",
                });
            }
        }
        if !k.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "k".into(),
                value: k,
                range: "finite",
            });
        }
        Ok(PhiFamily::Unicorn { b0, k, q, c })
    }

    pub fn custom(text: &str, params: &[f64]) -> Result<Self> {
        if params.len() > 9 {
            return Err(Error::DimensionMismatch {
                expected: 9,
                got: params.len(),
            });
        }
        let mut names = vec!["s".to_string()];
        names.extend(indexed_names("p", params.len()));
        let allowed: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(PhiFamily::Custom {
            expr: Expr::parse(text, &allowed)?,
            params: params.to_vec(),
        })
    }

    /// Endpoint of the closed s-interval for almost-regular families.
    pub fn singular_bound(&self) -> Option<f64> {
        match self {
            PhiFamily::Unicorn { b0, .. } => Some(*b0),
            _ => None,
        }
    }

    /// True where derivatives may be taken: strictly inside the margin for unicorns.
    pub fn admissible(&self, s: f64) -> bool {
        match self {
            PhiFamily::Unicorn { b0, .. } => s.abs() < b0 * (1.0 - DEFAULT_DELTA),
            PhiFamily::RiemannSqrt { k } => 1.0 + k * s * s > 0.0,
            _ => s.is_finite(),
        }
    }

    /// Taylor coefficients of φ about `s0`, up to `order`.
    pub fn series(&self, s0: f64, order: usize) -> Result<Vec<f64>> {
        Ok(self.jet(s0, order)?.coeffs().to_vec())
    }

    /// Univariate jet of φ about `s0`.
    pub fn jet(&self, s0: f64, order: usize) -> Result<JetScalar> {
        let t = JetScalar::variable(0, s0, 1, order)?;
        match self {
            PhiFamily::Randers => Ok(&t + 1.0),
            PhiFamily::RiemannSqrt { k } => {
                let inner = &(&t * &t).scale(*k) + 1.0;
                if inner.value() <= 0.0 {
                    return Err(Error::Domain(format!("1 + k s^2 <= 0 at s = {s0}")));
                }
                inner.sqrt()
            }
            PhiFamily::Unicorn { b0, k, q, c } => {
                if !self.admissible(s0) {
                    return Err(Error::Domain(format!(
                        "s = {s0} outside the admissible interval |s| < {}",
                        b0 * (1.0 - DEFAULT_DELTA)
                    )));
                }
                let g = unicorn_g_jet(&t, *b0, *k, *q)?;
                // ln φ = ln c + ∫₀^s g; its Taylor tail is g's series integrated.
                let mut log_coeffs = vec![c.ln() + unicorn_integral(s0, *b0, *k, *q)?];
                for j in 0..order {
                    log_coeffs.push(g.coeffs()[j] / (j as f64 + 1.0));
                }
                Ok(JetScalar::from_coeffs(log_coeffs, 1, order)?.exp())
            }
            PhiFamily::Custom { expr, params } => {
                let names = indexed_names("p", params.len());
                let mut bind: Vec<(&str, JetScalar)> = vec![("s", t.clone())];
                for (name, v) in names.iter().zip(params) {
                    bind.push((name.as_str(), t.lift(*v)));
                }
                expr.eval_jet(&bind, &t)
            }
        }
    }

    /// `(φ, φ′, φ″, φ‴)` at `s`.
    pub fn eval(&self, s: f64) -> Result<[f64; 4]> {
        let c = self.series(s, 3)?;
        let out = [c[0], c[1], 2.0 * c[2], 6.0 * c[3]];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("phi not finite at s = {s}")));
        }
        Ok(out)
    }

    /// φ alone; unicorns accept the closed interval `|s| ≤ b₀`.
    pub fn value(&self, s: f64) -> Result<f64> {
        match self {
            PhiFamily::Unicorn { b0, k, q, c } => {
                if s.abs() > *b0 {
                    return Err(Error::Domain(format!("|s| = {} > b0 = {b0}", s.abs())));
                }
                Ok(c * unicorn_integral(s, *b0, *k, *q)?.exp())
            }
            PhiFamily::Randers => Ok(1.0 + s),
            PhiFamily::RiemannSqrt { k } => {
                let inner = 1.0 + k * s * s;
                if inner <= 0.0 {
                    return Err(Error::Domain(format!("1 + k s^2 <= 0 at s = {s}")));
                }
                Ok(inner.sqrt())
            }
            PhiFamily::Custom { expr, params } => {
                let names = indexed_names("p", params.len());
                let mut bind: Vec<(&str, f64)> = vec![("s", s)];
                bind.extend(names.iter().map(String::as_str).zip(params.iter().copied()));
                expr.eval_real(&bind)
            }
        }
    }

    /// Fails with `NonPositivePhi` unless `φ > 0` and `φ − sφ′ > 0`.
    pub fn check_positive(&self, s: f64) -> Result<()> {
        let [p, d, _, _] = self.eval(s)?;
        if p <= 0.0 || p - s * d <= 0.0 {
            return Err(Error::NonPositivePhi(s));
        }
        Ok(())
    }
}

fn unicorn_g_jet(t: &JetScalar, b0: f64, k: f64, q: f64) -> Result<JetScalar> {
    let root = (&(t * t).scale(-1.0) + b0 * b0).sqrt()?;
    let num = &t.scale(k) + &root.scale(q);
    let den = &(&(t * t).scale(k) + 1.0) + &(t * &root).scale(q);
    if den.value() <= DENOMINATOR_FLOOR {
        return Err(Error::NonPositivePhi(t.value()));
    }
    num.try_div(&den)
}

/// `∫₀^s g(t) dt` through `t = b₀ sin θ`, which removes the endpoint square root.
pub fn unicorn_integral(s: f64, b0: f64, k: f64, q: f64) -> Result<f64> {
    let theta_end = (s / b0).clamp(-1.0, 1.0).asin();
    let integrand = |th: f64| {
        let (sn, cs) = th.sin_cos();
        let num = (k * b0 * sn + q * b0 * cs) * b0 * cs;
        let den = 1.0 + k * b0 * b0 * sn * sn + q * b0 * b0 * sn * cs;
        num / den
    };
    for th in [0.0, theta_end, 0.5 * theta_end] {
        let sn = th.sin();
        let cs = th.cos();
        if 1.0 + k * b0 * b0 * sn * sn + q * b0 * b0 * sn * cs <= 0.0 {
            return Err(Error::NonPositivePhi(b0 * sn));
        }
    }
    adaptive_simpson(integrand, 0.0, theta_end, 1e-13)
}

/// Q, Q′, Q″, Δ, Θ, Φ, Ψ at one `(b, s, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaScalars {
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub delta: f64,
    pub theta: f64,
    pub phi_cap: f64,
    pub psi: f64,
}

/// Taylor series in s about `s0` of the (α,β) scalar functions.
#[derive(Debug, Clone)]
pub struct AbSeries {
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi_cap: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Series of Q, Δ, Θ, Φ, Ψ to `order` (at most `MAX_ORDER − 3`).
pub fn ab_series(f: &PhiFamily, b: f64, s0: f64, n: usize, order: usize) -> Result<AbSeries> {
    if order + 3 > MAX_ORDER {
        return Err(Error::JetShape(format!("ab_series order {order} exceeds {}", MAX_ORDER - 3)));
    }
    let top = order + 3;
    let phi = f.jet(s0, top)?;
    let t = JetScalar::variable(0, s0, 1, top)?;
    let d1 = phi.derivative(0)?; // order + 2
    let d2 = d1.derivative(0)?; // order + 1
    let at = |j: &JetScalar, k: usize| j.truncate(k);

    let b2 = b * b;
    let t2 = at(&t, order + 2)?;
    let base = &at(&phi, order + 2)? - &(&t2 * &d1);
    if base.value() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(format!("phi - s phi' = {:e} at s = {s0}", base.value())));
    }
    let q = d1.try_div(&base)?; // order + 2
    let q1 = q.derivative(0)?; // order + 1
    let q2 = q1.derivative(0)?; // order

    let t1 = at(&t, order + 1)?;
    let w1 = &(&t1 * &t1).scale(-1.0) + b2; // b² − s²
    let q_1 = at(&q, order + 1)?;
    let delta = &(&(&t1 * &q_1) + 1.0) + &(&w1 * &q1);
    if delta.value() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(format!("Delta = {:e} at s = {s0}", delta.value())));
    }
    let psi_den = &at(&base, order + 1)? + &(&w1 * &d2);
    if psi_den.value() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(format!(
            "(phi - s phi') + (b^2 - s^2) phi'' = {:e} at s = {s0}",
            psi_den.value()
        )));
    }
    let psi = d2.try_div(&psi_den.scale(2.0))?;
    let theta = (&q_1 - &(&t1 * &q1)).try_div(&delta.scale(2.0))?;

    let t0 = at(&t, order)?;
    let q0 = at(&q, order)?;
    let w0 = at(&w1, order)?;
    let delta0 = at(&delta, order)?;
    let qsq = &q0 - &(&t0 * &at(&q1, order)?);
    let one_sq = &(&t0 * &q0) + 1.0;
    let phi_cap = -(&(&qsq * &(&delta0.scale(n as f64) + &one_sq)) + &(&(&w0 * &one_sq) * &q2));

    Ok(AbSeries {
        q: q0.coeffs().to_vec(),
        delta: delta0.coeffs().to_vec(),
        theta: at(&theta, order)?.coeffs().to_vec(),
        phi_cap: phi_cap.coeffs().to_vec(),
        psi: at(&psi, order)?.coeffs().to_vec(),
    })
}

pub fn ab_scalars(f: &PhiFamily, b: f64, s: f64, n: usize) -> Result<AlphaBetaScalars> {
    if s.abs() > b * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("|s| = {} exceeds b = {b}", s.abs())));
    }
    let ser = ab_series(f, b, s, n, 0)?;
    let (q, q1, q2) = q_derivatives(f, s)?;
    Ok(AlphaBetaScalars {
        q,
        q1,
        q2,
        delta: ser.delta[0],
        theta: ser.theta[0],
        phi_cap: ser.phi_cap[0],
        psi: ser.psi[0],
    })
}

/// `(Q, Q′, Q″)` at `s`.
pub fn q_derivatives(f: &PhiFamily, s: f64) -> Result<(f64, f64, f64)> {
    let phi = f.jet(s, 3)?;
    let t = JetScalar::variable(0, s, 1, 2)?;
    let d1 = phi.derivative(0)?;
    let base = &phi.truncate(2)? - &(&t * &d1);
    if base.value() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(format!("phi - s phi' = {:e} at s = {s}", base.value())));
    }
    let q = d1.try_div(&base)?;
    Ok((q.coeffs()[0], q.coeffs()[1], 2.0 * q.coeffs()[2]))
}

/// `Q″ − sQ′/(b²−s²) + Q/(b²−s²)`.
pub fn ode_residual(f: &PhiFamily, b: f64, s: f64) -> Result<f64> {
    if s.abs() >= b {
        return Err(Error::Domain(format!("|s| = {} >= b = {b}", s.abs())));
    }
    let (q, q1, q2) = q_derivatives(f, s)?;
    let w = b * b - s * s;
    Ok(q2 - s * q1 / w + q / w)
}

/// The four closed-form terms of the reduced ODE and their assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTerms {
    pub lambda1: f64,
    pub lambda2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// `αΘ₂ + 2Λ₁Θ₁ + Λ₂Q`.
    pub assembled: f64,
    /// `assembled · α / (b²−s²)²`, independent of α.
    pub residual: f64,
}

pub fn ode_terms(f: &PhiFamily, b: f64, s: f64, alpha: f64) -> Result<OdeTerms> {
    if s.abs() >= b {
        return Err(Error::Domain(format!("|s| = {} >= b = {b}", s.abs())));
    }
    if alpha <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let (q, q1, q2) = q_derivatives(f, s)?;
    let w = b * b - s * s;
    let lambda1 = s;
    let lambda2 = w / alpha;
    let theta1 = w * q1 / alpha;
    let theta2 = w * (w * q2 - 3.0 * s * q1) / (alpha * alpha);
    let assembled = alpha * theta2 + 2.0 * lambda1 * theta1 + lambda2 * q;
    Ok(OdeTerms {
        lambda1,
        lambda2,
        theta1,
        theta2,
        assembled,
        residual: assembled * alpha / (w * w),
    })
}

/// Volume normalization used for `f(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VolumeDensity {
    /// `f(b) = ∫ sinⁿ⁻² t dt / ∫ sinⁿ⁻² t φ(b cos t)⁻ⁿ dt`.
    #[default]
    BusemannHausdorff,
    /// `f(b) = ∫ sinⁿ⁻² t T(b cos t) dt / ∫ sinⁿ⁻² t dt`.
    HolmesThompson,
}

/// `T(s) = φ(φ−sφ′)ⁿ⁻²[(φ−sφ′) + (b²−s²)φ″]`.
pub fn t_function(f: &PhiFamily, b: f64, s: f64, n: usize) -> Result<f64> {
    let [p, d1, d2, _] = f.eval(s)?;
    let base = p - s * d1;
    Ok(p * base.powi(n as i32 - 2) * (base + (b * b - s * s) * d2))
}

/// Density `f(b)` of the chosen volume form relative to `√det a`.
pub fn volume_density(f: &PhiFamily, b: f64, n: usize, kind: VolumeDensity) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let weight = |t: f64| t.sin().powi(n as i32 - 2);
    let norm = adaptive_simpson(weight, 0.0, pi, 1e-13)?;
    let out = match kind {
        VolumeDensity::BusemannHausdorff => {
            let mut err = None;
            let inv = adaptive_simpson(
                |t| match f.value(b * t.cos()) {
                    Ok(p) if p > 0.0 => weight(t) * p.powi(-(n as i32)),
                    Ok(p) => {
                        err.get_or_insert(Error::NonPositivePhi(p));
                        f64::NAN
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                pi,
                1e-13,
            );
            if let Some(e) = err {
                return Err(e);
            }
            norm / inv?
        }
        VolumeDensity::HolmesThompson => {
            let mut err = None;
            let num = adaptive_simpson(
                |t| match t_function(f, b, b * t.cos(), n) {
                    Ok(v) => weight(t) * v,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                pi,
                1e-13,
            );
            if let Some(e) = err {
                return Err(e);
            }
            num? / norm
        }
    };
    if out.is_nan() || out <= 0.0 {
        return Err(Error::NonPositiveDensity(out));
    }
    Ok(out)
}

/// Scales Taylor coefficients to derivatives.
pub fn coeffs_to_derivatives(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(k, v)| v * factorial(k)).collect()
}
