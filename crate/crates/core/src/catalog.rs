//! Built-in metrics and the Zermelo navigation converter.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{ChartDomain, FnField, MetricField, MetricSpec};
use crate::phi::PhiFamily;

/// A named metric with its default φ.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub params: BTreeMap<String, f64>,
    pub metric: MetricSpec,
    pub phi: PhiFamily,
}

/// A tunable parameter of a catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub range: &'static str,
    valid: fn(f64) -> bool,
}

fn open_unit(v: f64) -> bool {
    v.abs() < 1.0
}

fn above_one(v: f64) -> bool {
    v > 1.0
}

fn positive_below_one(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn sign(v: f64) -> bool {
    v == 1.0 || v == -1.0
}

fn any(v: f64) -> bool {
    v.is_finite()
}

const EPS: ParamSpec = ParamSpec {
    name: "eps",
    default: 0.5,
    range: "|eps| < 1",
    valid: open_unit,
};

pub const NAMES: &[&str] = &[
    "euclid",
    "euclid_randers",
    "lie_group",
    "fish_tank",
    "mw",
    "sphere_randers",
    "bao_shen",
    "proj_sphere_killing",
    "zermelo_euclid",
];

/// Parameters accepted by `name`.
pub fn param_specs(name: &str) -> Result<Vec<ParamSpec>> {
    Ok(match name {
        "euclid" | "lie_group" | "fish_tank" | "mw" => vec![],
        "euclid_randers" | "sphere_randers" => vec![EPS],
        "bao_shen" => vec![
            ParamSpec {
                name: "K",
                default: 2.0,
                range: "K > 1",
                valid: above_one,
            },
            ParamSpec {
                name: "sign",
                default: 1.0,
                range: "sign = ±1",
                valid: sign,
            },
        ],
        "proj_sphere_killing" => vec![ParamSpec {
            name: "kappa",
            default: 0.5,
            range: "0 < kappa < 1",
            valid: positive_below_one,
        }],
        "zermelo_euclid" => vec![
            ParamSpec {
                name: "w1",
                default: 0.6,
                range: "w1² + w2² < 1",
                valid: any,
            },
            ParamSpec {
                name: "w2",
                default: 0.0,
                range: "w1² + w2² < 1",
                valid: any,
            },
        ],
        other => return Err(Error::UnknownName(other.to_string())),
    })
}

fn resolve(name: &str, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let specs = param_specs(name)?;
    for key in given.keys() {
        if !specs.iter().any(|s| s.name == key) {
            return Err(Error::UnknownName(format!("parameter `{key}` of {name}")));
        }
    }
    let mut out = BTreeMap::new();
    for s in specs {
        let v = given.get(s.name).copied().unwrap_or(s.default);
        if !(s.valid)(v) {
            return Err(Error::ParamOutOfRange {
                name: s.name.to_string(),
                value: v,
                range: s.range,
            });
        }
        out.insert(s.name.to_string(), v);
    }
    Ok(out)
}

fn boxed(lo: &[f64], hi: &[f64]) -> ChartDomain {
    ChartDomain::Box {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
    }
}

fn spec<A, B>(n: usize, a: A, b: B, domain: ChartDomain) -> Result<MetricSpec>
where
    A: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    B: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
{
    MetricSpec::new(Arc::new(FnField::new(n, a, b)), domain)
}

fn euclid_randers(eps: f64) -> Result<MetricSpec> {
    spec(
        2,
        |_| DMatrix::identity(2, 2),
        move |_| DVector::from_vec(vec![eps, 0.0]),
        boxed(&[-2.0, -2.0], &[2.0, 2.0]),
    )
}

fn lie_group() -> Result<MetricSpec> {
    spec(
        2,
        |x| DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / (x[1] * x[1]),
        |x| DVector::from_vec(vec![1.0 / x[1], 1.0 / x[1]]),
        boxed(&[-3.0, 0.2], &[3.0, 5.0]),
    )
}

fn fish_tank() -> Result<MetricSpec> {
    spec(
        2,
        |x| {
            let (u, v) = (x[0], x[1]);
            let l = 1.0 - u * u - v * v;
            DMatrix::from_row_slice(2, 2, &[v * v + l, -u * v, -u * v, u * u + l]) / (l * l)
        },
        |x| {
            let l = 1.0 - x[0] * x[0] - x[1] * x[1];
            DVector::from_vec(vec![x[1] / l, -x[0] / l])
        },
        ChartDomain::Disc {
            center: vec![0.0, 0.0],
            radius: 0.95_f64.sqrt(),
        },
    )
}

fn mw() -> Result<MetricSpec> {
    spec(
        2,
        |x| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, (2.0 * x[0]).exp()])),
        |_| DVector::from_vec(vec![1.0, 0.0]),
        boxed(&[-2.0, -2.0], &[2.0, 2.0]),
    )
}

fn sphere_randers(eps: f64) -> Result<MetricSpec> {
    let e2 = 1.0 - eps * eps;
    spec(
        2,
        move |x| {
            let r2 = x[0] * x[0];
            let w = 1.0 + e2 * r2;
            DMatrix::from_row_slice(2, 2, &[1.0 / ((1.0 + r2) * w), 0.0, 0.0, r2 * (1.0 + r2) / (w * w)])
        },
        move |x| {
            let r2 = x[0] * x[0];
            DVector::from_vec(vec![0.0, -eps * r2 / (1.0 + e2 * r2)])
        },
        boxed(&[0.1, 0.0], &[3.0, 2.0 * PI]),
    )
}

fn bao_shen_forms(x: &[f64]) -> ([Vector3<f64>; 3], f64) {
    let (u, v, w) = (x[0], x[1], x[2]);
    (
        [
            Vector3::new(1.0, -w, v),
            Vector3::new(w, 1.0, -u),
            Vector3::new(-v, u, 1.0),
        ],
        1.0 + u * u + v * v + w * w,
    )
}

fn bao_shen(k: f64, sgn: f64) -> Result<MetricSpec> {
    let c = sgn * (k - 1.0).sqrt();
    spec(
        3,
        move |x| {
            let ([l1, l2, l3], rho) = bao_shen_forms(x);
            let a = l1 * l1.transpose() * k + l2 * l2.transpose() + l3 * l3.transpose();
            DMatrix::from_iterator(3, 3, a.iter().copied()) / (rho * rho)
        },
        move |x| {
            let ([l1, _, _], rho) = bao_shen_forms(x);
            DVector::from_iterator(3, l1.iter().map(|v| c * v / rho))
        },
        boxed(&[-1.0; 3], &[1.0; 3]),
    )
}

fn proj_sphere_killing(kappa: f64) -> Result<MetricSpec> {
    spec(
        3,
        |x| {
            let xv = DVector::from_column_slice(x);
            let rho = 1.0 + xv.dot(&xv);
            (DMatrix::identity(3, 3) * rho - &xv * xv.transpose()) / (rho * rho)
        },
        move |x| {
            let rho = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            DVector::from_vec(vec![kappa * x[2] / rho, kappa / rho, -kappa * x[0] / rho])
        },
        boxed(&[-1.0; 3], &[1.0; 3]),
    )
}

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;

/// Riemannian sea `h` and wind `W` for Zermelo navigation.
#[derive(Clone)]
pub struct ZermeloData {
    pub n: usize,
    pub h: Arc<MatrixFn>,
    pub wind: Arc<VectorFn>,
}

impl std::fmt::Debug for ZermeloData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZermeloData").field("n", &self.n).finish()
    }
}

impl ZermeloData {
    /// `λ = 1 − ‖W‖²_h`.
    pub fn lambda(&self, x: &[f64]) -> f64 {
        let w = (self.wind)(x);
        1.0 - w.dot(&((self.h)(x) * &w))
    }

    /// `W₀ = h_ij W^i y^j`.
    pub fn w0(&self, x: &[f64], y: &[f64]) -> f64 {
        let w = (self.wind)(x);
        ((self.h)(x) * w).dot(&DVector::from_column_slice(y))
    }

    pub fn into_metric(self, domain: ChartDomain) -> Result<MetricSpec> {
        MetricSpec::new(Arc::new(self), domain)
    }
}

/// `a_ij = (λ h_ij + W_i W_j)/λ²`, `b_i = −W_i/λ` with `W_i = h_ij W^j`.
pub fn zermelo_to_randers(z: &ZermeloData, x: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let h = (z.h)(x);
    let w_low = &h * (z.wind)(x);
    let lambda = z.lambda(x);
    if lambda <= 0.0 {
        return Err(Error::FastWind(1.0 - lambda));
    }
    let a = (h * lambda + &w_low * w_low.transpose()) / (lambda * lambda);
    Ok((a, -w_low / lambda))
}

impl MetricField for ZermeloData {
    fn dim(&self) -> usize {
        self.n
    }

    fn a(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        zermelo_to_randers(self, x).map(|(a, _)| a)
    }

    fn b(&self, x: &[f64]) -> Result<DVector<f64>> {
        zermelo_to_randers(self, x).map(|(_, b)| b)
    }
}

/// Constant wind over the Euclidean plane.
pub fn zermelo_euclid(w: [f64; 2]) -> ZermeloData {
    ZermeloData {
        n: 2,
        h: Arc::new(|_| DMatrix::identity(2, 2)),
        wind: Arc::new(move |_| DVector::from_vec(w.to_vec())),
    }
}

/// Looks up a catalog metric, filling unspecified parameters with defaults.
pub fn get_metric(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let p = resolve(name, params)?;
    let get = |k: &str| p[k];
    let (name, description, metric, phi): (&'static str, &'static str, MetricSpec, PhiFamily) = match name {
        "euclid" => ("euclid", "Euclidean plane", euclid_randers(0.0)?, PhiFamily::Randers),
        "euclid_randers" => (
            "euclid_randers",
            "Minkowski Randers norm |y| + eps y¹ on the plane",
            euclid_randers(get("eps"))?,
            PhiFamily::Randers,
        ),
        "lie_group" => (
            "lie_group",
            "left-invariant Randers metric on a two-dimensional Lie group",
            lie_group()?,
            PhiFamily::Randers,
        ),
        "fish_tank" => (
            "fish_tank",
            "Shen's fish-tank Randers metric on the unit disc",
            fish_tank()?,
            PhiFamily::Randers,
        ),
        "mw" => (
            "mw",
            "diag(1, e^{2x¹}) with b = dx¹ and F² = α² + β²",
            mw()?,
            PhiFamily::RiemannSqrt { k: 1.0 },
        ),
        "sphere_randers" => (
            "sphere_randers",
            "Randers metric on the sphere in polar coordinates (r, θ)",
            sphere_randers(get("eps"))?,
            PhiFamily::Randers,
        ),
        "bao_shen" => (
            "bao_shen",
            "Bao–Shen Randers metrics on S³ in projective coordinates",
            bao_shen(get("K"), get("sign"))?,
            PhiFamily::Randers,
        ),
        "proj_sphere_killing" => (
            "proj_sphere_killing",
            "round S³ in projective coordinates with a Killing form of length kappa",
            proj_sphere_killing(get("kappa"))?,
            PhiFamily::Randers,
        ),
        "zermelo_euclid" => {
            let w = [get("w1"), get("w2")];
            if w[0] * w[0] + w[1] * w[1] >= 1.0 {
                return Err(Error::ParamOutOfRange {
                    name: "w1² + w2²".to_string(),
                    value: w[0] * w[0] + w[1] * w[1],
                    range: "< 1",
                });
            }
            (
                "zermelo_euclid",
                "Randers metric solving Zermelo navigation under a constant wind",
                zermelo_euclid(w).into_metric(boxed(&[-1.0, -1.0], &[1.0, 1.0]))?,
                PhiFamily::Randers,
            )
        }
        other => return Err(Error::UnknownName(other.to_string())),
    };
    Ok(CatalogEntry {
        name,
        description,
        params: p,
        metric,
        phi,
    })
}

/// [`get_metric`] with default parameters.
pub fn get_default(name: &str) -> Result<CatalogEntry> {
    get_metric(name, &BTreeMap::new())
}
