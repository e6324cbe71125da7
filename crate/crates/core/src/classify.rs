//! Metric-level predicates and the trichotomy verdict.
//!
//! Every predicate is a residual compared against a threshold; the verdict
//! is true iff `residual < threshold`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_bundle, density_terms, log_sigma_gradient, BundleOptions, CurvatureBundle};
use crate::error::{Error, Result};
use crate::finsler::fundamental;
use crate::geometry::{beta_derivatives, MetricSpec};
use crate::phi::{q_derivatives, PhiFamily, VolumeDensity};
use crate::sampling::{samples, Sample};
use crate::spray::SprayRoute;

/// Per-predicate tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tensor: f64,
    pub s: f64,
    pub dual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tensor: 1e-6,
            s: 1e-5,
            dual: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredicateVerdict {
    pub verdict: bool,
    pub residual: f64,
    pub threshold: f64,
    pub n_samples: usize,
}

impl PredicateVerdict {
    pub fn new(residual: f64, threshold: f64, n_samples: usize) -> Self {
        PredicateVerdict {
            verdict: residual < threshold,
            residual,
            threshold,
            n_samples,
        }
    }
}

type PointTerms = (usize, Option<Result<(Vec<f64>, bool)>>, Option<Result<crate::curvature::DensityTerms>>);

/// `max |b(x) − b(x₀)| < tol · max(1, b(x₀))` with `x₀` the first grid point.
pub fn is_generalized_berwald(m: &MetricSpec, grid: &[Vec<f64>], tol: f64) -> Result<PredicateVerdict> {
    let x0 = grid.first().ok_or(Error::EmptyGrid)?;
    let b0 = m.b_norm(x0)?;
    let mut residual: f64 = 0.0;
    for x in grid {
        residual = residual.max((m.b_norm(x)? - b0).abs());
    }
    Ok(PredicateVerdict::new(residual, tol * b0.max(1.0), grid.len()))
}

/// `max(|r_ij|, |s_i|) < tol`.
pub fn killing_constant_length(m: &MetricSpec, grid: &[Vec<f64>], tol: f64) -> Result<PredicateVerdict> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut residual: f64 = 0.0;
    for x in grid {
        let bc = beta_derivatives(m, x)?;
        residual = residual.max(bc.r.amax()).max(bc.s_i.amax());
    }
    Ok(PredicateVerdict::new(residual, tol, grid.len()))
}

/// `max |r_ij + b_i s_j + b_j s_i| < tol` (Randers only).
pub fn randers_s0_shortcut(m: &MetricSpec, f: &PhiFamily, grid: &[Vec<f64>], tol: f64) -> Result<PredicateVerdict> {
    if !matches!(f, PhiFamily::Randers) {
        return Err(Error::WrongPhiVariant(f.to_string()));
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut residual: f64 = 0.0;
    for x in grid {
        residual = residual.max(randers_shortcut_residual(m, x)?);
    }
    Ok(PredicateVerdict::new(residual, tol, grid.len()))
}

pub fn randers_shortcut_residual(m: &MetricSpec, x: &[f64]) -> Result<f64> {
    let bc = beta_derivatives(m, x)?;
    let n = bc.n;
    let mut out: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = bc.r[(i, j)] + bc.b_lower[i] * bc.s_i[j] + bc.b_lower[j] * bc.s_i[i];
            out = out.max(v.abs());
        }
    }
    Ok(out)
}

/// Curvature predicates over a sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureFlags {
    pub berwald: PredicateVerdict,
    pub landsberg: PredicateVerdict,
    pub douglas: PredicateVerdict,
    pub s_zero: PredicateVerdict,
    pub riemannian: PredicateVerdict,
    /// `max |R^i_k|` against the tensor tolerance.
    pub flat: PredicateVerdict,
    /// Spread of the flag curvature over all samples.
    pub k_constant: PredicateVerdict,
    /// `max |S_def − S_formula|` with relative scaling.
    pub s_dual: Option<PredicateVerdict>,
    pub k_range: (f64, f64),
    pub failed: usize,
    pub first_error: Option<String>,
    pub approximate: bool,
}

/// One bundle per sample; failures are kept in place.
pub fn sweep(
    m: &MetricSpec,
    f: &PhiFamily,
    samples: &[Sample],
    opts: &BundleOptions,
) -> Result<Vec<Result<CurvatureBundle>>> {
    let mut points: Vec<usize> = samples.iter().map(|s| s.point).collect();
    points.dedup();
    let shared: Vec<PointTerms> = points
        .par_iter()
        .map(|&p| {
            let x = &samples.iter().find(|s| s.point == p).expect("point present").x;
            let grad = opts.s_def.then(|| log_sigma_gradient(m, f, x));
            let dens = opts
                .s_formula
                .then(|| m.b_norm(x).and_then(|b| density_terms(f, b, m.n, opts.density)));
            (p, grad, dens)
        })
        .collect();
    Ok(samples
        .par_iter()
        .map(|s| {
            let (_, grad, dens) = shared.iter().find(|(p, _, _)| *p == s.point).expect("point present");
            let grad = match grad {
                Some(Ok(g)) => Some(g),
                Some(Err(e)) => return Err(e.clone()),
                None => None,
            };
            let mut o = *opts;
            let dens = match dens {
                Some(Ok(d)) => Some(d),
                Some(Err(_)) => {
                    o.s_formula = false;
                    None
                }
                None => None,
            };
            curvature_bundle(m, f, &s.x, &s.y, &o, grad, dens)
        })
        .collect())
}

/// Bundle options used by the classifier sweep.
pub fn classify_options(route: SprayRoute) -> BundleOptions {
    BundleOptions {
        route,
        h: false,
        density: CLASSIFY_DENSITY,
        ..BundleOptions::default()
    }
}

pub fn curvature_flags(
    m: &MetricSpec,
    f: &PhiFamily,
    grid: &[Vec<f64>],
    dirs: &[Vec<f64>],
    tol: &Tolerances,
    route: SprayRoute,
) -> Result<CurvatureFlags> {
    let (samples, _) = samples(m, f, grid, dirs)?;
    let results = sweep(m, f, &samples, &classify_options(route))?;
    flags_from_sweep(m, f, &samples, &results, tol)
}

/// Reduces a classifier sweep to predicate verdicts.
pub fn flags_from_sweep(
    m: &MetricSpec,
    f: &PhiFamily,
    samples: &[Sample],
    results: &[Result<CurvatureBundle>],
    tol: &Tolerances,
) -> Result<CurvatureFlags> {
    let mut first_error = None;
    let mut ok = Vec::new();
    for (s, r) in samples.iter().zip(results) {
        match r {
            Ok(b) => ok.push((s, b)),
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if ok.is_empty() {
        return Err(Error::AllSamplesSingular);
    }
    let failed = samples.len() - ok.len();
    let cartan: Vec<f64> = ok
        .par_iter()
        .map(|(s, _)| fundamental(m, f, &s.x, &s.y).map(|fd| fd.cartan.max_abs()))
        .collect::<Result<_>>()?;
    let n_ok = ok.len();
    let maxed = |get: &dyn Fn(&CurvatureBundle) -> f64| ok.iter().map(|(_, b)| get(b)).fold(0.0_f64, f64::max);
    let b_max = maxed(&|b| b.berwald.max_abs());
    let l_max = maxed(&|b| b.landsberg.max_abs());
    let d_max = maxed(&|b| b.douglas.max_abs());
    let s_max = maxed(&|b| b.s_def.map_or(0.0, f64::abs));
    let r_max = maxed(&|b| b.riemann.as_ref().map_or(0.0, |r| r.max_abs()));
    let c_max = cartan.iter().copied().fold(0.0_f64, f64::max);
    let ks: Vec<f64> = ok.iter().filter_map(|(_, b)| b.flag).collect();
    let k_lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let k_hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s_dual = {
        let pairs: Vec<(f64, f64)> = ok
            .iter()
            .filter_map(|(_, b)| Some((b.s_def?, b.s_formula?)))
            .collect();
        (!pairs.is_empty()).then(|| {
            let worst = pairs
                .iter()
                .map(|(a, b)| (a - b).abs() / (1e-7 + tol.dual * a.abs().max(b.abs())) * tol.dual)
                .fold(0.0_f64, f64::max);
            PredicateVerdict::new(worst, tol.dual, pairs.len())
        })
    };
    Ok(CurvatureFlags {
        berwald: PredicateVerdict::new(b_max, tol.tensor, n_ok),
        landsberg: PredicateVerdict::new(l_max, tol.tensor, n_ok),
        douglas: PredicateVerdict::new(d_max, tol.tensor, n_ok),
        s_zero: PredicateVerdict::new(s_max, tol.s, n_ok),
        riemannian: PredicateVerdict::new(c_max, tol.tensor, n_ok),
        flat: PredicateVerdict::new(r_max, tol.tensor, n_ok),
        k_constant: PredicateVerdict::new(if ks.is_empty() { 0.0 } else { k_hi - k_lo }, tol.s, ks.len()),
        s_dual,
        k_range: (k_lo, k_hi),
        failed,
        first_error,
        approximate: ok.iter().any(|(_, b)| b.approximate),
    })
}

/// Least-squares fit of `Q(s) ≈ k s + q √(b² − s²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnicornFit {
    pub k: f64,
    pub q: f64,
    pub rms: f64,
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn unicorn_fit_samples(s: &[f64], q: &[f64], b: f64) -> Result<UnicornFit> {
    if s.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: q.len(),
        });
    }
    if s.len() < MIN_FIT_SAMPLES {
        return Err(Error::Domain(format!(
            "unicorn fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            s.len()
        )));
    }
    let design = DMatrix::from_fn(s.len(), 2, |i, j| match j {
        0 => s[i],
        _ => (b * b - s[i] * s[i]).max(0.0).sqrt(),
    });
    let rhs = DVector::from_column_slice(q);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax.max(1e-300) {
        return Err(Error::RankDeficient);
    }
    let coef = svd.solve(&rhs, 0.0).map_err(|_| Error::RankDeficient)?;
    let resid = &design * &coef - rhs;
    Ok(UnicornFit {
        k: coef[0],
        q: coef[1],
        rms: (resid.norm_squared() / s.len() as f64).sqrt(),
    })
}

/// Fits `Q` of `f` at the midpoints of 20 equal cells of `|s| ≤ b(1 − δ)`.
pub fn unicorn_fit(f: &PhiFamily, b: f64, delta: f64) -> Result<UnicornFit> {
    let count = 20;
    let lim = b * (1.0 - delta);
    let s: Vec<f64> = (0..count)
        .map(|j| -lim + 2.0 * lim * (j as f64 + 0.5) / count as f64)
        .collect();
    let q = s
        .iter()
        .map(|&t| q_derivatives(f, t).map(|v| v.0))
        .collect::<Result<Vec<_>>>()?;
    unicorn_fit_samples(&s, &q, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    RiemannianIsotropic,
    LocallyMinkowskiLike,
    UnicornCase,
    NotGeneralizedBerwald,
    SNonzero,
    Inconclusive,
}

/// Grid bookkeeping for a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub points: usize,
    pub directions: usize,
    pub samples: usize,
    pub masked: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub gb: Option<PredicateVerdict>,
    pub killing_cl: Option<PredicateVerdict>,
    pub randers_shortcut: Option<PredicateVerdict>,
    pub berwald: Option<PredicateVerdict>,
    pub landsberg: Option<PredicateVerdict>,
    pub douglas: Option<PredicateVerdict>,
    pub s_zero: Option<PredicateVerdict>,
    pub riemannian: Option<PredicateVerdict>,
    pub flat: Option<PredicateVerdict>,
    pub k_constant: Option<PredicateVerdict>,
    pub s_dual: Option<PredicateVerdict>,
    pub unicorn_fit: Option<UnicornFit>,
    pub unicorn_threshold: f64,
    pub verdict: Verdict,
    pub grid: GridMeta,
    pub first_error: Option<String>,
    pub approximate: bool,
}

impl ClassificationReport {
    pub fn empty(tol: &Tolerances) -> Self {
        ClassificationReport {
            gb: None,
            killing_cl: None,
            randers_shortcut: None,
            berwald: None,
            landsberg: None,
            douglas: None,
            s_zero: None,
            riemannian: None,
            flat: None,
            k_constant: None,
            s_dual: None,
            unicorn_fit: None,
            unicorn_threshold: tol.tensor,
            verdict: Verdict::Inconclusive,
            grid: GridMeta {
                points: 0,
                directions: 0,
                samples: 0,
                masked: 0,
                failed: 0,
            },
            first_error: None,
            approximate: false,
        }
    }
}

fn holds(p: &Option<PredicateVerdict>) -> bool {
    p.is_some_and(|v| v.verdict)
}

/// Priority: ¬gb, ¬S=0, Riemannian, Berwald with R≈0, Killing with unicorn Q, otherwise inconclusive.
pub fn theorem11_verdict(r: &ClassificationReport) -> Result<Verdict> {
    let gb = r.gb.ok_or(Error::MissingReports("gb"))?;
    if !gb.verdict {
        return Ok(Verdict::NotGeneralizedBerwald);
    }
    let s = r.s_zero.ok_or(Error::MissingReports("s_zero"))?;
    if !s.verdict {
        return Ok(Verdict::SNonzero);
    }
    if holds(&r.riemannian) {
        return Ok(Verdict::RiemannianIsotropic);
    }
    if holds(&r.berwald) && holds(&r.flat) {
        return Ok(Verdict::LocallyMinkowskiLike);
    }
    if holds(&r.killing_cl) && r.unicorn_fit.is_some_and(|u| u.rms < r.unicorn_threshold) {
        return Ok(Verdict::UnicornCase);
    }
    Ok(Verdict::Inconclusive)
}

/// Runs every predicate and assembles the report.
pub fn classify(
    m: &MetricSpec,
    f: &PhiFamily,
    grid: &[Vec<f64>],
    dirs: &[Vec<f64>],
    tol: &Tolerances,
    route: SprayRoute,
) -> Result<ClassificationReport> {
    let (all, masked) = samples(m, f, grid, dirs)?;
    let results = sweep(m, f, &all, &classify_options(route))?;
    classify_from_sweep(m, f, grid, dirs, tol, &all, masked, &results)
}

/// Assembles the report from a sweep over `samples(m, f, grid, dirs)`.
#[allow(clippy::too_many_arguments)]
pub fn classify_from_sweep(
    m: &MetricSpec,
    f: &PhiFamily,
    grid: &[Vec<f64>],
    dirs: &[Vec<f64>],
    tol: &Tolerances,
    all: &[Sample],
    masked: usize,
    results: &[Result<CurvatureBundle>],
) -> Result<ClassificationReport> {
    let mut r = ClassificationReport::empty(tol);
    let gb = is_generalized_berwald(m, grid, tol.tensor)?;
    r.gb = Some(gb);
    r.killing_cl = Some(killing_constant_length(m, grid, tol.tensor)?);
    if matches!(f, PhiFamily::Randers) {
        r.randers_shortcut = Some(randers_s0_shortcut(m, f, grid, tol.tensor)?);
    }
    let flags = flags_from_sweep(m, f, all, results, tol)?;
    r.berwald = Some(flags.berwald);
    r.landsberg = Some(flags.landsberg);
    r.douglas = Some(flags.douglas);
    r.s_zero = Some(flags.s_zero);
    r.riemannian = Some(flags.riemannian);
    r.flat = Some(flags.flat);
    r.k_constant = Some(flags.k_constant);
    r.s_dual = flags.s_dual;
    r.first_error = flags.first_error;
    r.approximate = flags.approximate;
    r.grid = GridMeta {
        points: grid.len(),
        directions: dirs.len(),
        samples: all.len(),
        masked,
        failed: flags.failed,
    };
    let b0 = m.b_norm(&grid[0])?;
    if gb.verdict && b0 > 1e-6 {
        r.unicorn_fit = unicorn_fit(f, b0, m.delta).ok();
    }
    r.verdict = theorem11_verdict(&r)?;
    Ok(r)
}

/// Volume density used by [`classify`] for the formula route.
pub const CLASSIFY_DENSITY: VolumeDensity = VolumeDensity::BusemannHausdorff;
