//! The acceptance suite: thirteen criteria, each a list of residual checks.
//!
//! Shared by the `acceptance` test target and `finsler check`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{get_default, get_metric, zermelo_euclid, zermelo_to_randers, CatalogEntry};
use crate::classify::{is_generalized_berwald, randers_shortcut_residual, sweep, unicorn_fit};
use crate::curvature::{
    berwald, berwald_2d_identity, berwald_from_jets, douglas_2d_identity, douglas_from_jets, flag_curvature,
    landsberg, log_sigma_gradient, mean_berwald_vertical, riemann, s_curvature_def_with, transverse, BundleOptions,
};
use crate::error::{Error, Result};
use crate::finsler::{f2_jet_at, finsler_eval, fundamental};
use crate::geometry::{beta_derivatives, beta_norm_gradient_check, ChartDomain};
use crate::phi::{ode_residual, q_derivatives, PhiFamily};
use crate::sampling::{directions, disc_grid, domain_grid, normalize, random_points, samples, Sample};
use crate::spray::{spray_ab, spray_generic, spray_jet, SprayRoute};

pub const DEFAULT_SEED: u64 = 42;
pub const CRITERIA: u8 = 13;
/// Absolute floor added to relative comparisons.
pub const ABS_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Below,
    Above,
}

/// One residual against one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn below(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            label: label.into(),
            value,
            threshold,
            bound: Bound::Below,
            passed: value < threshold,
        }
    }

    pub fn above(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            label: label.into(),
            value,
            threshold,
            bound: Bound::Above,
            passed: value > threshold,
        }
    }

    /// `|computed − expected| < tol`, with both numbers in the label.
    pub fn close(label: &str, computed: f64, expected: f64, tol: f64) -> Self {
        Check::below(
            format!("{label}: computed {computed:.12}, expected {expected:.12}"),
            (computed - expected).abs(),
            tol,
        )
    }

    pub fn flag(label: impl Into<String>, ok: bool) -> Self {
        Check {
            label: label.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 0.5,
            bound: Bound::Above,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    /// `PASS`/`FAIL` line followed by one line per failing check.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "criterion {:>2} {} {} ({} checks)",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len()
        );
        if let Some(e) = &self.error {
            out.push_str(&format!("\n    error: {e}"));
        }
        for c in self.checks.iter().filter(|c| !c.passed) {
            let op = match c.bound {
                Bound::Below => "<",
                Bound::Above => ">",
            };
            out.push_str(&format!("\n    {}: {:.3e} not {op} {:.1e}", c.label, c.value, c.threshold));
        }
        out
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "lie_group one-form components",
        2 => "lie_group curvature verdicts",
        3 => "fish_tank norm, S and K",
        4 => "sphere_randers closed forms and S",
        5 => "mw r and s identities",
        6 => "unicorn Q, ODE and fit",
        7 => "dual-route spray and S",
        8 => "two-dimensional Douglas and Berwald identities",
        9 => "bao_shen norm and S",
        10 => "proj_sphere_killing Killing, norm, non-closed",
        11 => "norm gradient identity",
        12 => "Zermelo navigation",
        13 => "structural invariants",
        _ => "unknown",
    }
}

pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let checks = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(seed),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(seed),
        13 => criterion_13(seed),
        other => Err(Error::UnknownName(format!("criterion {other}"))),
    };
    let (checks, error) = match checks {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionResult {
        id,
        title: title(id),
        checks,
        error,
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    (1..=CRITERIA).map(|id| run_criterion(id, seed)).collect()
}

fn entry(name: &str, kv: &[(&str, f64)]) -> Result<CatalogEntry> {
    let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    get_metric(name, &params)
}

/// `|a − b| / (max(|a|, |b|) + floor/tol)`; below `tol` iff `|a − b| < tol·max + floor`.
pub fn relative_gap(a: f64, b: f64, tol: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + ABS_FLOOR / tol)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn unit_samples(e: &CatalogEntry, grid: &[Vec<f64>], count: usize) -> Result<Vec<Sample>> {
    let dirs = directions(e.metric.n, count)?;
    Ok(samples(&e.metric, &e.phi, grid, &dirs)?.0)
}

fn s_def_at_samples(e: &CatalogEntry, samples: &[Sample]) -> Result<Vec<f64>> {
    let mut grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        if let std::collections::btree_map::Entry::Vacant(slot) = grads.entry(s.point) {
            slot.insert(log_sigma_gradient(&e.metric, &e.phi, &s.x)?.0);
        }
        out.push(s_curvature_def_with(&e.metric, &e.phi, SprayRoute::Generic, &s.x, &s.y, &grads[&s.point])?);
    }
    Ok(out)
}

fn criterion_1() -> Result<Vec<Check>> {
    let e = get_default("lie_group")?;
    let x = [0.0, 1.0];
    let bc = beta_derivatives(&e.metric, &x)?;
    Ok(vec![
        Check::close("s_12 at (0,1)", bc.s[(0, 1)], 1.0, 1e-8),
        Check::close("s_1 at (0,1)", bc.s_i[0], -1.0 / 3.0, 1e-8),
        Check::close("s_2 at (0,1)", bc.s_i[1], 1.0 / 3.0, 1e-8),
        Check::close("b^2 at (0,1)", bc.b_norm * bc.b_norm, 2.0 / 3.0, 1e-8),
    ])
}

fn criterion_2() -> Result<Vec<Check>> {
    let e = get_default("lie_group")?;
    let grid = domain_grid(&e.metric.domain, 5)?;
    let gb = is_generalized_berwald(&e.metric, &grid, 1e-6)?;
    let x = [0.0, 1.0];
    let y = [1.0, 0.0];
    let (grad, _) = log_sigma_gradient(&e.metric, &e.phi, &x)?;
    let s = s_curvature_def_with(&e.metric, &e.phi, SprayRoute::Generic, &x, &y, &grad)?;
    let samples = unit_samples(&e, &grid, 16)?;
    let opts = BundleOptions {
        riemann: false,
        h: false,
        s_def: false,
        s_formula: false,
        ..BundleOptions::default()
    };
    let bundles = sweep(&e.metric, &e.phi, &samples, &opts)?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Check::flag(format!("gb verdict (residual {:.2e})", gb.residual), gb.verdict),
        Check::above("|S| at (0,1), y=(1,0)", s.abs(), 0.01),
        Check::above("max |B|", max_of(bundles.iter().map(|b| b.berwald.max_abs())), 1e-3),
        Check::above("max |L|", max_of(bundles.iter().map(|b| b.landsberg.max_abs())), 1e-3),
        Check::above("max |D|", max_of(bundles.iter().map(|b| b.douglas.max_abs())), 1e-3),
    ])
}

fn criterion_3() -> Result<Vec<Check>> {
    let e = get_default("fish_tank")?;
    let center = [0.0, 0.0];
    let grid = disc_grid(&center, 0.9, 5);
    let norm_gap = grid
        .iter()
        .map(|x| Ok((e.metric.b_norm(x)? - x[0].hypot(x[1])).abs()))
        .collect::<Result<Vec<_>>>()?;
    let inner = disc_grid(&center, 0.9, 3);
    let samples = unit_samples(&e, &inner, 8)?;
    let s = s_def_at_samples(&e, &samples)?;
    let k = samples
        .iter()
        .map(|smp| {
            let r = riemann(&e.metric, &e.phi, SprayRoute::Generic, &smp.x, &smp.y)?;
            let fd = fundamental(&e.metric, &e.phi, &smp.x, &smp.y)?;
            flag_curvature(&fd, &r, &smp.y, &transverse(&smp.y))
        })
        .collect::<Result<Vec<_>>>()?;
    let gb = is_generalized_berwald(&e.metric, &grid, 1e-6)?;
    Ok(vec![
        Check::below("max |b − √(x²+y²)| on 5×5 grid", max_of(norm_gap), 1e-8),
        Check::below("max |S| at 9 points × 8 directions", max_of(s.iter().map(|v| v.abs())), 1e-5),
        Check::below("max |K| at 9 points × 8 directions", max_of(k.iter().map(|v| v.abs())), 1e-5),
        Check::flag(format!("gb verdict false (residual {:.2e})", gb.residual), !gb.verdict),
    ])
}

fn criterion_4() -> Result<Vec<Check>> {
    let eps = 0.5;
    let e = entry("sphere_randers", &[("eps", eps)])?;
    let w = 1.0 - eps * eps;
    let mut checks = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let bc = beta_derivatives(&e.metric, &[r, 1.0])?;
        let d = 1.0 + w * r * r;
        checks.push(Check::close(
            &format!("r_12 at r={r}"),
            bc.r[(0, 1)],
            eps.powi(3) * r.powi(3) / ((1.0 + r * r) * d * d),
            1e-8,
        ));
        checks.push(Check::close(&format!("s_12 at r={r}"), bc.s[(0, 1)], eps * r / (d * d), 1e-8));
        checks.push(Check::close(
            &format!("s_1 at r={r}"),
            bc.s_i[0],
            eps * eps * r / ((1.0 + r * r) * d),
            1e-8,
        ));
    }
    let grid = domain_grid(&e.metric.domain, 5)?;
    let shortcut = grid
        .iter()
        .map(|x| randers_shortcut_residual(&e.metric, x))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::below("max |r_ij + b_i s_j + b_j s_i|", max_of(shortcut), 1e-10));
    let samples = unit_samples(&e, &domain_grid(&e.metric.domain, 3)?, 8)?;
    let s = s_def_at_samples(&e, &samples)?;
    checks.push(Check::below("max |S| (definitional)", max_of(s.iter().map(|v| v.abs())), 1e-6));
    let gb = is_generalized_berwald(&e.metric, &grid, 1e-6)?;
    checks.push(Check::flag(format!("gb verdict false (residual {:.2e})", gb.residual), !gb.verdict));
    Ok(checks)
}

fn criterion_5() -> Result<Vec<Check>> {
    let e = get_default("mw")?;
    let mut s_max: f64 = 0.0;
    let mut r_gap: f64 = 0.0;
    for x in domain_grid(&e.metric.domain, 3)? {
        let bc = beta_derivatives(&e.metric, &x)?;
        s_max = s_max.max(bc.s.amax());
        let b2 = bc.b_norm * bc.b_norm;
        for i in 0..2 {
            for j in 0..2 {
                let want = b2 * bc.a[(i, j)] - bc.b_lower[i] * bc.b_lower[j];
                r_gap = r_gap.max((bc.r[(i, j)] - want).abs());
            }
        }
    }
    Ok(vec![
        Check::below("max |s_ij| on 3×3 grid", s_max, 1e-10),
        Check::below("max |r_ij − (b² a_ij − b_i b_j)| on 3×3 grid", r_gap, 1e-10),
    ])
}

fn criterion_6() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (b0, k, q) in [(1.0, 0.0, 1.0), (1.0, 0.3, 0.7), (0.8, -0.2, 0.5)] {
        let f = PhiFamily::unicorn(b0, k, q, 1.0)?;
        let lim = b0 * (1.0 - 0.05);
        let s: Vec<f64> = (0..20).map(|j| -lim + 2.0 * lim * (j as f64 + 0.5) / 20.0).collect();
        let mut q_gap: f64 = 0.0;
        let mut ode: f64 = 0.0;
        for &t in &s {
            let (qv, _, _) = q_derivatives(&f, t)?;
            q_gap = q_gap.max((qv - k * t - q * (b0 * b0 - t * t).sqrt()).abs());
            ode = ode.max(ode_residual(&f, b0, t)?.abs());
        }
        let fit = unicorn_fit(&f, b0, 0.05)?;
        let tag = format!("(b0,k,q)=({b0},{k},{q})");
        checks.push(Check::below(format!("max |Q − ks − q√(b0²−s²)| {tag}"), q_gap, 1e-8));
        checks.push(Check::below(format!("max ODE residual {tag}"), ode, 1e-6));
        checks.push(Check::close(&format!("fitted k {tag}"), fit.k, k, 1e-7));
        checks.push(Check::close(&format!("fitted q {tag}"), fit.q, q, 1e-7));
    }
    Ok(checks)
}

fn criterion_7() -> Result<Vec<Check>> {
    let tol = 1e-6;
    let mut checks = Vec::new();
    for name in ["lie_group", "sphere_randers", "euclid_randers"] {
        let e = get_default(name)?;
        let grid = domain_grid(&e.metric.domain, 5)?;
        let mut worst: f64 = 0.0;
        for smp in unit_samples(&e, &grid, 16)? {
            let a = spray_ab(&e.metric, &e.phi, &smp.x, &smp.y)?;
            let g = spray_generic(&e.metric, &e.phi, &smp.x, &smp.y)?;
            for (u, v) in a.iter().zip(&g) {
                worst = worst.max(relative_gap(*u, *v, tol));
            }
        }
        checks.push(Check::below(format!("{name}: spray_ab vs spray_generic"), worst, tol));
    }
    let dual = 1e-4;
    for (name, per_axis, count) in [("lie_group", 3, 8), ("euclid_randers", 3, 8), ("proj_sphere_killing", 1, 6)] {
        let e = get_default(name)?;
        let samples = unit_samples(&e, &domain_grid(&e.metric.domain, per_axis)?, count)?;
        let def = s_def_at_samples(&e, &samples)?;
        let mut worst: f64 = 0.0;
        for (smp, sd) in samples.iter().zip(&def) {
            let sf = crate::curvature::s_curvature_formula(
                &e.metric,
                &e.phi,
                &smp.x,
                &smp.y,
                crate::phi::VolumeDensity::BusemannHausdorff,
            )?;
            worst = worst.max(relative_gap(*sd, sf, dual));
        }
        checks.push(Check::below(format!("{name}: S formula vs definition"), worst, dual));
    }
    Ok(checks)
}

fn criterion_8() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ["lie_group", "sphere_randers"] {
        let e = get_default(name)?;
        let samples = unit_samples(&e, &domain_grid(&e.metric.domain, 3)?, 4)?;
        let mut dres: f64 = 0.0;
        let mut bres: f64 = 0.0;
        for smp in &samples {
            let g = spray_jet(&e.metric, &e.phi, SprayRoute::Generic, &smp.x, &smp.y, 4)?;
            let (b, ee) = berwald_from_jets(&g);
            let ev = mean_berwald_vertical(&g);
            let d = douglas_from_jets(&g, &smp.y)?;
            dres = dres.max(douglas_2d_identity(&b, &ee, &ev, &d, &smp.y)?);
            let fd = fundamental(&e.metric, &e.phi, &smp.x, &smp.y)?;
            let l = landsberg(&fd, &b);
            bres = bres.max(berwald_2d_identity(&fd, &smp.y, &b, &ee, &l)?);
        }
        checks.push(Check::below(format!("{name}: Douglas decomposition residual"), dres, 1e-6));
        checks.push(Check::below(format!("{name}: Berwald decomposition residual"), bres, 1e-6));
    }
    Ok(checks)
}

fn criterion_9(seed: u64) -> Result<Vec<Check>> {
    let e = entry("bao_shen", &[("K", 2.0)])?;
    let pts = random_points(&e.metric.domain, 5, seed);
    let gap = pts
        .iter()
        .map(|x| Ok((e.metric.b_norm(x)? - 0.5_f64.sqrt()).abs()))
        .collect::<Result<Vec<_>>>()?;
    let samples = unit_samples(&e, &pts[..3], 6)?;
    let s = s_def_at_samples(&e, &samples)?;
    Ok(vec![
        Check::below("max |b − √0.5| at 5 random points", max_of(gap), 1e-8),
        Check::below("max |S| at 3 points × 6 directions", max_of(s.iter().map(|v| v.abs())), 1e-4),
    ])
}

fn criterion_10() -> Result<Vec<Check>> {
    let kappa = 0.5;
    let e = entry("proj_sphere_killing", &[("kappa", kappa)])?;
    let mut r_max: f64 = 0.0;
    let mut s_max: f64 = 0.0;
    let mut b_gap: f64 = 0.0;
    for x in domain_grid(&e.metric.domain, 3)? {
        let bc = beta_derivatives(&e.metric, &x)?;
        r_max = r_max.max(bc.r.amax());
        s_max = s_max.max(bc.s.amax());
        b_gap = b_gap.max((bc.b_norm - kappa).abs());
    }
    Ok(vec![
        Check::below("max |r_ij|", r_max, 1e-6),
        Check::below("max |b − κ|", b_gap, 1e-6),
        Check::above("max |s_ij|", s_max, 1e-3),
    ])
}

fn criterion_11() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ["sphere_randers", "fish_tank"] {
        let e = get_default(name)?;
        let mut worst: f64 = 0.0;
        let mut used = 0;
        for x in domain_grid(&e.metric.domain, 5)? {
            if e.metric.b_norm(&x)? <= 0.1 {
                continue;
            }
            used += 1;
            worst = worst.max(max_of(beta_norm_gradient_check(&e.metric, &x)?.iter().map(|v| v.abs())));
        }
        checks.push(Check::below(format!("{name}: |∂b − (r_i+s_i)/b| over {used} points"), worst, 1e-5));
    }
    Ok(checks)
}

fn criterion_12(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norm_gap: f64 = 0.0;
    let mut nav_gap: f64 = 0.0;
    for _ in 0..10 {
        let r = rng.gen_range(0.0..0.9);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = [r * t.cos(), r * t.sin()];
        let z = zermelo_euclid(w);
        let x = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let (a, b) = zermelo_to_randers(&z, &x)?;
        let ainv = a.clone().try_inverse().ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
        norm_gap = norm_gap.max((b.dot(&(&ainv * &b)) - r * r).abs());
        let e = get_metric(
            "zermelo_euclid",
            &[("w1".to_string(), w[0]), ("w2".to_string(), w[1])].into_iter().collect(),
        )?;
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let y = [ang.cos(), ang.sin()];
        let fv = finsler_eval(&e.metric, &e.phi, &x, &y)?;
        let v = [y[0] / fv - w[0], y[1] / fv - w[1]];
        nav_gap = nav_gap.max((v[0].hypot(v[1]) - 1.0).abs());
    }
    Ok(vec![
        Check::below("max |‖β‖²_α − ‖W‖²_h| over 10 winds", norm_gap, 1e-10),
        Check::below("max |h(y/F − W) − 1| over 10 winds", nav_gap, 1e-9),
    ])
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.2 && norm <= 1.0 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

fn criterion_13(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["lie_group", "fish_tank", "sphere_randers", "mw", "euclid_randers", "bao_shen"];
    let mut homog_f: f64 = 0.0;
    let mut homog_g: f64 = 0.0;
    let mut cartan_y: f64 = 0.0;
    let mut b_sym: f64 = 0.0;
    let mut b_y: f64 = 0.0;
    let mut flag_u: f64 = 0.0;
    let mut jet_fd: f64 = 0.0;
    let lambda = 1.7;
    for (i, name) in names.iter().enumerate() {
        let e = get_default(name)?;
        let (m, f, n) = (&e.metric, &e.phi, e.metric.n);
        let region = match &m.domain {
            ChartDomain::Disc { center, radius } => ChartDomain::Disc {
                center: center.clone(),
                radius: 0.9 * radius,
            },
            other => other.clone(),
        };
        for x in random_points(&region, 3, seed.wrapping_add(i as u64)) {
            let y = normalize(m, f, &x, &random_unit(&mut rng, n))?;
            let fy = finsler_eval(m, f, &x, &y)?;
            let ly: Vec<f64> = y.iter().map(|v| lambda * v).collect();
            homog_f = homog_f.max(relative_gap(finsler_eval(m, f, &x, &ly)?, lambda * fy, 1e-8));
            let g1 = spray_generic(m, f, &x, &y)?;
            let g2 = spray_generic(m, f, &x, &ly)?;
            for (a, b) in g1.iter().zip(&g2) {
                homog_g = homog_g.max(relative_gap(*b, lambda * lambda * a, 1e-8));
            }
            let fd = fundamental(m, f, &x, &y)?;
            for a in 0..n {
                for b in 0..n {
                    let c: f64 = (0..n).map(|k| fd.cartan.get(&[a, b, k]) * y[k]).sum();
                    cartan_y = cartan_y.max(c.abs());
                }
            }
            let (bt, _) = berwald(m, f, SprayRoute::Generic, &x, &y)?;
            for idx in bt.indices() {
                let (i0, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                b_sym = b_sym.max((bt.get(&idx) - bt.get(&[i0, k, j, l])).abs());
                b_sym = b_sym.max((bt.get(&idx) - bt.get(&[i0, l, k, j])).abs());
                if l == 0 {
                    let c: f64 = (0..n).map(|ll| bt.get(&[i0, j, k, ll]) * y[ll]).sum();
                    b_y = b_y.max(c.abs());
                }
            }
            if n == 2 {
                let r = riemann(m, f, SprayRoute::AlphaBeta, &x, &y)?;
                let k1 = flag_curvature(&fd, &r, &y, &transverse(&y))?;
                let u2 = [y[0] + 0.8 * y[1] + 0.3, y[1] - 0.5];
                let k2 = flag_curvature(&fd, &r, &y, &u2)?;
                flag_u = flag_u.max((k1 - k2).abs() / k1.abs().max(1.0));
            }
            let p = f2_jet_at(m, f, &x, &y, 1)?;
            let h = 1e-5;
            for k in 0..n {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[k] += h;
                ym[k] -= h;
                let fd_grad = (finsler_eval(m, f, &x, &yp)?.powi(2) - finsler_eval(m, f, &x, &ym)?.powi(2)) / (2.0 * h);
                jet_fd = jet_fd.max(relative_gap(p.partial_of(&[k]), fd_grad, 1e-6));
            }
        }
    }
    Ok(vec![
        Check::below("F positive 1-homogeneity (relative)", homog_f, 1e-8),
        Check::below("G positive 2-homogeneity (relative)", homog_g, 1e-8),
        Check::below("max |C_ijk y^k|", cartan_y, 1e-8),
        Check::below("B total symmetry", b_sym, 1e-8),
        Check::below("max |B^i_jkl y^l|", b_y, 1e-7),
        Check::below("flag curvature u-independence (scaled by max(1, |K|))", flag_u, 1e-8),
        Check::below("F² gradient: jet vs finite difference (relative)", jet_fd, 1e-6),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert!(Check::below("x", 0.5, 1.0).passed);
        assert!(!Check::above("x", 0.5, 1.0).passed);
        assert!(Check::close("x", 1.0 + 1e-9, 1.0, 1e-8).passed);
        assert!(!Check::flag("x", false).passed);
    }

    #[test]
    fn relative_gap_has_absolute_floor() {
        assert!(relative_gap(0.0, 5e-8, 1e-6) < 1e-6);
        assert!(relative_gap(0.0, 2e-7, 1e-6) > 1e-6);
        assert!(relative_gap(100.0, 100.0 + 5e-5, 1e-6) < 1e-6);
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        let r = run_criterion(99, DEFAULT_SEED);
        assert!(!r.passed());
        assert!(r.summary().contains("FAIL"));
    }
}
