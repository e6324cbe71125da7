//! Berwald, Landsberg, Douglas, Riemann, flag, H- and S-curvature.
//!
//! Fiber derivatives come exactly from y-jets of the spray; base derivatives
//! are Richardson central differences of those jets at stencil points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::{fundamental, sigma_bh, FundamentalData};
use crate::geometry::{beta_contractions, beta_derivatives, MetricSpec};
use crate::jets::{base_derivative_vec, base_gradient, JetScalar};
use crate::phi::{ab_scalars, volume_density, PhiFamily, VolumeDensity};
use crate::spray::{spray_jet, SprayRoute};
use crate::tensor::Tensor;

const FLAG_FLOOR: f64 = 1e-12;
const DENSITY_STEP: f64 = 1e-4;
const SMALL_B: f64 = 1e-3;

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `B^i_jkl = ∂³G^i/∂y^j∂y^k∂y^l` and `E_jk = ½ B^m_mjk` from spray jets of order ≥ 3.
pub fn berwald_from_jets(g: &[JetScalar]) -> (Tensor, Tensor) {
    let n = g.len();
    let b = Tensor::from_fn(n, 4, |i| g[i[0]].partial_of(&i[1..]));
    let e = Tensor::from_fn(n, 2, |i| 0.5 * (0..n).map(|m| b.get(&[m, m, i[0], i[1]])).sum::<f64>());
    (b, e)
}

/// `E_jk,l = ∂E_jk/∂y^l` from spray jets of order ≥ 4.
pub fn mean_berwald_vertical(g: &[JetScalar]) -> Tensor {
    let n = g.len();
    Tensor::from_fn(n, 3, |i| {
        0.5 * (0..n)
            .map(|m| g[m].partial_of(&[m, i[0], i[1], i[2]]))
            .sum::<f64>()
    })
}

pub fn berwald(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<(Tensor, Tensor)> {
    Ok(berwald_from_jets(&spray_jet(m, f, route, x, y, 3)?))
}

/// `L_jkl = −½ y_i B^i_jkl`.
pub fn landsberg(fd: &FundamentalData, b: &Tensor) -> Tensor {
    let n = b.n;
    Tensor::from_fn(n, 3, |j| {
        -0.5 * (0..n)
            .map(|i| fd.y_lower[i] * b.get(&[i, j[0], j[1], j[2]]))
            .sum::<f64>()
    })
}

/// Third y-derivatives of the projective spray `G^i − (1/(n+1)) (∂G^m/∂y^m) y^i`.
pub fn douglas_from_jets(g: &[JetScalar], y: &[f64]) -> Result<Tensor> {
    let n = g.len();
    let mut div = g[0].derivative(0)?;
    for (m, gm) in g.iter().enumerate().skip(1) {
        div = &div + &gm.derivative(m)?;
    }
    let order = div.max_order();
    let yv = JetScalar::variables(y, order)?;
    let coef = 1.0 / (n as f64 + 1.0);
    let proj: Vec<JetScalar> = (0..n)
        .map(|i| Ok(&g[i].truncate(order)? - &(&div * &yv[i]).scale(coef)))
        .collect::<Result<_>>()?;
    Ok(Tensor::from_fn(n, 4, |i| proj[i[0]].partial_of(&i[1..])))
}

pub fn douglas(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<Tensor> {
    douglas_from_jets(&spray_jet(m, f, route, x, y, 4)?, y)
}

/// `G^i` and `N^i_j` flattened as `[G^0..G^n, N^0_0, N^0_1, ..]`.
fn spray_first_order(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = m.n;
    let g = spray_jet(m, f, route, x, y, 1)?;
    let mut out: Vec<f64> = g.iter().map(JetScalar::value).collect();
    for gi in &g {
        for j in 0..n {
            out.push(gi.partial_of(&[j]));
        }
    }
    Ok(out)
}

/// `R^i_k = 2∂_kG^i − y^j∂_j N^i_k + 2G^j G^i_jk − N^i_j N^j_k`.
pub fn riemann_from_jets(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64], g: &[JetScalar]) -> Result<Tensor> {
    let n = m.n;
    // dx[k] = ∂_k of [G, N] flattened.
    let dx: Vec<Vec<f64>> = (0..n)
        .map(|k| base_derivative_vec(|p| spray_first_order(m, f, route, p, y), x, k, 1))
        .collect::<Result<_>>()?;
    Ok(Tensor::from_fn(n, 2, |idx| {
        let (i, k) = (idx[0], idx[1]);
        let mut acc = 2.0 * dx[k][i];
        for j in 0..n {
            acc -= y[j] * dx[j][n + i * n + k];
            acc += 2.0 * g[j].value() * g[i].partial_of(&[j, k]);
            acc -= g[i].partial_of(&[j]) * g[j].partial_of(&[k]);
        }
        acc
    }))
}

pub fn riemann(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<Tensor> {
    let g = spray_jet(m, f, route, x, y, 2)?;
    riemann_from_jets(m, f, route, x, y, &g)
}

/// `K(y, u) = g_y(u, R_y u) / (g_y(y, y) g_y(u, u) − g_y(y, u)²)`.
pub fn flag_curvature(fd: &FundamentalData, r: &Tensor, y: &[f64], u: &[f64]) -> Result<f64> {
    let n = r.n;
    let ru: Vec<f64> = (0..n).map(|i| (0..n).map(|k| r.get(&[i, k]) * u[k]).sum()).collect();
    let den = fd.inner(y, y) * fd.inner(u, u) - fd.inner(y, u).powi(2);
    if den < FLAG_FLOOR {
        return Err(Error::DegenerateFlag(den));
    }
    Ok(fd.inner(u, &ru) / den)
}

/// Riemann curvature and the flag curvature of the flag spanned by `y` and `u`.
pub fn riemann_flag(
    m: &MetricSpec,
    f: &PhiFamily,
    route: SprayRoute,
    x: &[f64],
    y: &[f64],
    u: &[f64],
) -> Result<(Tensor, f64)> {
    let r = riemann(m, f, route, x, y)?;
    let fd = fundamental(m, f, x, y)?;
    let k = flag_curvature(&fd, &r, y, u)?;
    Ok((r, k))
}

/// A transverse vector for the flag at `y` (`n = 2`: the Euclidean rotation of `y`).
pub fn transverse(y: &[f64]) -> Vec<f64> {
    match y.len() {
        2 => vec![-y[1], y[0]],
        n => {
            let j = (0..n)
                .min_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
                .unwrap_or(0);
            (0..n).map(|i| delta(i, j)).collect()
        }
    }
}

/// `∇ ln σ_BH` and whether any volume quadrature was approximate.
pub fn log_sigma_gradient(m: &MetricSpec, f: &PhiFamily, x: &[f64]) -> Result<(Vec<f64>, bool)> {
    let approx = std::sync::atomic::AtomicBool::new(false);
    let grad = base_gradient(
        |p| {
            let s = sigma_bh(m, f, p)?;
            if s.approximate {
                approx.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            Ok(s.sigma.ln())
        },
        x,
    )?;
    Ok((grad, approx.into_inner()))
}

/// S-curvature value with the quadrature flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SValue {
    pub s: f64,
    pub approximate: bool,
}

/// `S = ∂G^i/∂y^i − y^i ∂_i ln σ_BH` given the log-density gradient.
pub fn s_curvature_def_with(
    m: &MetricSpec,
    f: &PhiFamily,
    route: SprayRoute,
    x: &[f64],
    y: &[f64],
    log_sigma_grad: &[f64],
) -> Result<f64> {
    let g = spray_jet(m, f, route, x, y, 1)?;
    Ok(divergence(&g) - y.iter().zip(log_sigma_grad).map(|(a, b)| a * b).sum::<f64>())
}

fn divergence(g: &[JetScalar]) -> f64 {
    g.iter().enumerate().map(|(i, gi)| gi.partial_of(&[i])).sum()
}

pub fn s_curvature_def(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<SValue> {
    let (grad, approximate) = log_sigma_gradient(m, f, x)?;
    Ok(SValue {
        s: s_curvature_def_with(m, f, route, x, y, &grad)?,
        approximate,
    })
}

/// Volume density `f(b)` with `f′(b)/b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityTerms {
    pub b: f64,
    pub f_b: f64,
    pub f_prime_over_b: f64,
}

pub fn density_terms(f: &PhiFamily, b: f64, n: usize, kind: VolumeDensity) -> Result<DensityTerms> {
    let fb = volume_density(f, b, n, kind)?;
    let dens = |t: f64| volume_density(f, t, n, kind);
    let f_prime_over_b = if b < SMALL_B {
        let h = SMALL_B;
        let f0 = dens(0.0)?;
        2.0 * (dens(h)? - f0) / (h * h)
    } else {
        let h = DENSITY_STEP;
        let d = match dens(b + h) {
            Ok(up) => (up - dens(b - h)?) / (2.0 * h),
            Err(_) => (3.0 * fb - 4.0 * dens(b - h)? + dens(b - 2.0 * h)?) / (2.0 * h),
        };
        d / b
    };
    Ok(DensityTerms {
        b,
        f_b: fb,
        f_prime_over_b,
    })
}

/// `S = [2Ψ − f′/(b f)](r_0 + s_0) − Φ/(2αΔ²)(r_00 − 2αQ s_0)`.
pub fn s_curvature_formula(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64], kind: VolumeDensity) -> Result<f64> {
    let b = m.b_norm(x)?;
    let terms = density_terms(f, b, m.n, kind)?;
    s_curvature_formula_with(m, f, x, y, &terms)
}

pub fn s_curvature_formula_with(m: &MetricSpec, f: &PhiFamily, x: &[f64], y: &[f64], terms: &DensityTerms) -> Result<f64> {
    let bc = beta_derivatives(m, x)?;
    let c = beta_contractions(&bc, y)?;
    let (alpha, beta) = m.alpha_beta(x, y)?;
    let sc = ab_scalars(f, bc.b_norm, beta / alpha, m.n)?;
    if terms.f_b <= 0.0 {
        return Err(Error::NonPositiveDensity(terms.f_b));
    }
    let first = (2.0 * sc.psi - terms.f_prime_over_b / terms.f_b) * (c.r0 + c.s0);
    let second = sc.phi_cap / (2.0 * alpha * sc.delta * sc.delta) * (c.r00 - 2.0 * alpha * sc.q * c.s0);
    Ok(first - second)
}

fn mean_berwald_flat(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (_, e) = berwald(m, f, route, x, y)?;
    Ok(e.data)
}

/// `H_ij = y^m ∂_m E_ij − 2G^k E_ij,k − E_kj N^k_i − E_ik N^k_j` from order-4 spray jets.
pub fn h_curvature_from_jets(
    m: &MetricSpec,
    f: &PhiFamily,
    route: SprayRoute,
    x: &[f64],
    y: &[f64],
    g: &[JetScalar],
) -> Result<Tensor> {
    let n = m.n;
    let (_, e) = berwald_from_jets(g);
    let ev = mean_berwald_vertical(g);
    let dx: Vec<Vec<f64>> = (0..n)
        .map(|k| base_derivative_vec(|p| mean_berwald_flat(m, f, route, p, y), x, k, 1))
        .collect::<Result<_>>()?;
    Ok(Tensor::from_fn(n, 2, |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = 0.0;
        for k in 0..n {
            acc += y[k] * dx[k][i * n + j];
            acc -= 2.0 * g[k].value() * ev.get(&[i, j, k]);
            acc -= e.get(&[k, j]) * g[k].partial_of(&[i]);
            acc -= e.get(&[i, k]) * g[k].partial_of(&[j]);
        }
        acc
    }))
}

pub fn h_curvature(m: &MetricSpec, f: &PhiFamily, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<Tensor> {
    let g = spray_jet(m, f, route, x, y, 4)?;
    h_curvature_from_jets(m, f, route, x, y, &g)
}

fn require_2d(n: usize) -> Result<()> {
    if n == 2 {
        Ok(())
    } else {
        Err(Error::Dimension { expected: 2, got: n })
    }
}

/// Max-norm of `D − [B − (2/3){E_jk δ^i_l + E_kl δ^i_j + E_lj δ^i_k + E_jk,l y^i}]`.
pub fn douglas_2d_identity(b: &Tensor, e: &Tensor, ev: &Tensor, d: &Tensor, y: &[f64]) -> Result<f64> {
    require_2d(b.n)?;
    let rhs = Tensor::from_fn(2, 4, |t| {
        let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
        let brace = e.get(&[j, k]) * delta(i, l)
            + e.get(&[k, l]) * delta(i, j)
            + e.get(&[l, j]) * delta(i, k)
            + ev.get(&[j, k, l]) * y[i];
        b.get(t) - 2.0 / 3.0 * brace
    });
    Ok(d.max_abs_diff(&rhs))
}

/// Max-norm of `B − [−(2/F²) L_jkl y^i + (2/3){E_jk h^i_l + E_kl h^i_j + E_jl h^i_k}]`.
pub fn berwald_2d_identity(fd: &FundamentalData, y: &[f64], b: &Tensor, e: &Tensor, l: &Tensor) -> Result<f64> {
    require_2d(b.n)?;
    let f2 = fd.f * fd.f;
    let h = |i: usize, j: usize| delta(i, j) - y[i] * fd.y_lower[j] / f2;
    let rhs = Tensor::from_fn(2, 4, |t| {
        let (i, j, k, ll) = (t[0], t[1], t[2], t[3]);
        -2.0 / f2 * l.get(&[j, k, ll]) * y[i]
            + 2.0 / 3.0 * (e.get(&[j, k]) * h(i, ll) + e.get(&[k, ll]) * h(i, j) + e.get(&[j, ll]) * h(i, k))
    });
    Ok(b.max_abs_diff(&rhs))
}

/// Which optional pieces [`curvature_bundle`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleOptions {
    pub route: SprayRoute,
    pub riemann: bool,
    pub h: bool,
    pub s_def: bool,
    pub s_formula: bool,
    pub density: VolumeDensity,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions {
            route: SprayRoute::Generic,
            riemann: true,
            h: true,
            s_def: true,
            s_formula: true,
            density: VolumeDensity::BusemannHausdorff,
        }
    }
}

/// Curvature quantities at one `(x, y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureBundle {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub spray: Vec<f64>,
    pub berwald: Tensor,
    pub mean_berwald: Tensor,
    pub landsberg: Tensor,
    pub douglas: Tensor,
    pub riemann: Option<Tensor>,
    /// Flag curvature of the flag spanned by `y` and [`transverse`]`(y)`.
    pub flag: Option<f64>,
    pub h: Option<Tensor>,
    pub s_def: Option<f64>,
    pub s_formula: Option<f64>,
    pub density: Option<DensityTerms>,
    pub approximate: bool,
}

/// Evaluates the bundle; `log_sigma_grad` and `density` may be shared across directions at the same point.
pub fn curvature_bundle(
    m: &MetricSpec,
    f: &PhiFamily,
    x: &[f64],
    y: &[f64],
    opts: &BundleOptions,
    log_sigma_grad: Option<&(Vec<f64>, bool)>,
    density: Option<&DensityTerms>,
) -> Result<CurvatureBundle> {
    let route = opts.route;
    let g = spray_jet(m, f, route, x, y, 4)?;
    let fd = fundamental(m, f, x, y)?;
    let (b, e) = berwald_from_jets(&g);
    let l = landsberg(&fd, &b);
    let d = douglas_from_jets(&g, y)?;
    let (riemann, flag) = if opts.riemann {
        let r = riemann_from_jets(m, f, route, x, y, &g)?;
        let k = flag_curvature(&fd, &r, y, &transverse(y))?;
        (Some(r), Some(k))
    } else {
        (None, None)
    };
    let h = if opts.h {
        Some(h_curvature_from_jets(m, f, route, x, y, &g)?)
    } else {
        None
    };
    let mut approximate = false;
    let s_def = if opts.s_def {
        let owned;
        let (grad, approx) = match log_sigma_grad {
            Some(v) => v,
            None => {
                owned = log_sigma_gradient(m, f, x)?;
                &owned
            }
        };
        approximate |= *approx;
        Some(divergence(&g) - y.iter().zip(grad).map(|(a, b)| a * b).sum::<f64>())
    } else {
        None
    };
    let (s_formula, density) = if opts.s_formula {
        let terms = match density {
            Some(t) => *t,
            None => density_terms(f, m.b_norm(x)?, m.n, opts.density)?,
        };
        (Some(s_curvature_formula_with(m, f, x, y, &terms)?), Some(terms))
    } else {
        (None, None)
    };
    Ok(CurvatureBundle {
        x: x.to_vec(),
        y: y.to_vec(),
        spray: g.iter().map(JetScalar::value).collect(),
        berwald: b,
        mean_berwald: e,
        landsberg: l,
        douglas: d,
        riemann,
        flag,
        h,
        s_def,
        s_formula,
        density,
        approximate,
    })
}
