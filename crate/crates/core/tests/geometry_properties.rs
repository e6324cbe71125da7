use std::sync::Arc;

use finsler_core::catalog::{get_default, CatalogEntry, NAMES};
use finsler_core::classify::{curvature_flags, Tolerances};
use finsler_core::curvature::{berwald, landsberg};
use finsler_core::finsler::{finsler_eval, fundamental, sigma_bh_with, SigmaGrid};
use finsler_core::geometry::{
    beta_derivatives, beta_norm_gradient_check, metric_compatibility_residual, ChartDomain, FnField, MetricSpec,
};
use finsler_core::sampling::{admissible_direction, directions, domain_grid, random_points};
use finsler_core::spray::{spray_ab, spray_generic, SprayRoute};
use finsler_core::tensor::Tensor;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(42),
        ..ProptestConfig::default()
    }
}

struct Point {
    entry: CatalogEntry,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// A catalog point away from disc rims with an admissible direction.
fn catalog_point(index: usize, seed: u64, dir: &[f64]) -> Option<Point> {
    let entry = get_default(NAMES[index % NAMES.len()]).unwrap();
    let domain = match &entry.metric.domain {
        ChartDomain::Disc { center, radius } => ChartDomain::Disc {
            center: center.clone(),
            radius: 0.9 * radius,
        },
        other => other.clone(),
    };
    let x = random_points(&domain, 1, seed).pop()?;
    let y: Vec<f64> = dir[..entry.metric.n].to_vec();
    if y.iter().map(|v| v * v).sum::<f64>() < 0.04 {
        return None;
    }
    if !admissible_direction(&entry.metric, &entry.phi, &x, &y).ok()? {
        return None;
    }
    Some(Point { entry, x, y })
}

fn point_strategy() -> impl Strategy<Value = (usize, u64, Vec<f64>)> {
    (0..NAMES.len(), any::<u64>(), prop::collection::vec(-1.0..1.0f64, 3))
}

fn scaled(y: &[f64], lambda: f64) -> Vec<f64> {
    y.iter().map(|v| v * lambda).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn contract_last(t: &Tensor, y: &[f64]) -> f64 {
    let n = t.n;
    let mut worst = 0.0_f64;
    let lead = t.rank - 1;
    for idx in Tensor::zeros(n, lead).indices() {
        let mut full = idx.clone();
        full.push(0);
        let mut acc = 0.0;
        for (l, yl) in y.iter().enumerate() {
            full[lead] = l;
            acc += t.get(&full) * yl;
        }
        worst = worst.max(acc.abs());
    }
    worst
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn fundamental_data_is_homogeneous((index, seed, dir) in point_strategy(), lambda in 0.1..10.0f64) {
        let Some(p) = catalog_point(index, seed, &dir) else { return Ok(()); };
        let (m, f) = (&p.entry.metric, &p.entry.phi);
        let ly = scaled(&p.y, lambda);
        let f1 = finsler_eval(m, f, &p.x, &p.y).unwrap();
        let fl = finsler_eval(m, f, &p.x, &ly).unwrap();
        prop_assert!(rel(fl, lambda * f1) < 1e-10, "{}: F(λy) {fl} vs λF {}", p.entry.name, lambda * f1);

        let fd = fundamental(m, f, &p.x, &p.y).unwrap();
        let fdl = fundamental(m, f, &p.x, &ly).unwrap();
        let gscale = fd.g.max_abs().max(1.0);
        prop_assert!(fd.g.max_abs_diff(&fdl.g) < 1e-8 * gscale, "{}: g not 0-homogeneous", p.entry.name);
        prop_assert!(rel(fd.inner(&p.y, &p.y), f1 * f1) < 1e-9, "{}: g(y,y) vs F²", p.entry.name);
        prop_assert!(contract_last(&fd.cartan, &p.y) < 1e-9 * fd.cartan.max_abs().max(1.0), "{}: C y", p.entry.name);
        prop_assert!(contract_last(&fd.angular, &p.y) < 1e-9 * gscale, "{}: h y", p.entry.name);
        if m.n == 2 {
            let iy: f64 = fd.mean_cartan.iter().zip(&p.y).map(|(a, b)| a * b).sum();
            prop_assert!(iy.abs() < 1e-9, "{}: I y = {iy}", p.entry.name);
        }
    }

    #[test]
    fn sprays_are_two_homogeneous_and_routes_agree((index, seed, dir) in point_strategy(), lambda in 0.2..5.0f64) {
        let Some(p) = catalog_point(index, seed, &dir) else { return Ok(()); };
        let (m, f) = (&p.entry.metric, &p.entry.phi);
        let g1 = spray_generic(m, f, &p.x, &p.y).unwrap();
        let gl = spray_generic(m, f, &p.x, &scaled(&p.y, lambda)).unwrap();
        let ga = spray_ab(m, f, &p.x, &p.y).unwrap();
        let scale = g1.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for i in 0..m.n {
            let want = lambda * lambda * g1[i];
            prop_assert!((gl[i] - want).abs() < 1e-8 * want.abs().max(scale * lambda * lambda).max(1e-7), "{}: G^{i}(λy)", p.entry.name);
            let gap = (g1[i] - ga[i]).abs() / (g1[i].abs().max(ga[i].abs()) + 1e-7 / 1e-6);
            prop_assert!(gap < 1e-6, "{}: route gap {gap} on G^{i}", p.entry.name);
        }
    }

    #[test]
    fn berwald_tensor_is_symmetric_and_annihilates_y((index, seed, dir) in point_strategy()) {
        let Some(p) = catalog_point(index, seed, &dir) else { return Ok(()); };
        let (m, f) = (&p.entry.metric, &p.entry.phi);
        let n = m.n;
        let (b, e) = berwald(m, f, SprayRoute::Generic, &p.x, &p.y).unwrap();
        let scale = b.max_abs().max(1.0);
        for idx in b.indices() {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            for perm in [[i, k, j, l], [i, j, l, k], [i, l, k, j]] {
                prop_assert!((b.get(&idx) - b.get(&perm)).abs() < 1e-8 * scale, "{}: B symmetry at {idx:?}", p.entry.name);
            }
        }
        prop_assert!(contract_last(&b, &p.y) < 1e-7 * scale, "{}: B y", p.entry.name);
        for j in 0..n {
            for k in 0..n {
                let trace: f64 = (0..n).map(|mm| b.get(&[mm, mm, j, k])).sum();
                prop_assert!((e.get(&[j, k]) - 0.5 * trace).abs() < 1e-10 * scale, "{}: E", p.entry.name);
            }
        }
        let fd = fundamental(m, f, &p.x, &p.y).unwrap();
        let l = landsberg(&fd, &b);
        for idx in l.indices() {
            let want: f64 = -0.5 * (0..n).map(|i| fd.y_lower[i] * b.get(&[i, idx[0], idx[1], idx[2]])).sum::<f64>();
            prop_assert!((l.get(&idx) - want).abs() < 1e-10 * scale, "{}: L", p.entry.name);
        }
    }

    #[test]
    fn one_form_calculus_is_consistent((index, seed, dir) in point_strategy()) {
        let Some(p) = catalog_point(index, seed, &dir) else { return Ok(()); };
        let m = &p.entry.metric;
        let n = m.n;
        let bc = beta_derivatives(m, &p.x).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert_eq!(bc.gamma.get(&[i, j, k]), bc.gamma.get(&[i, k, j]));
                }
                prop_assert!((bc.r[(i, j)] - bc.r[(j, i)]).abs() < 1e-12);
                prop_assert!((bc.s[(i, j)] + bc.s[(j, i)]).abs() < 1e-12);
                prop_assert!((bc.r[(i, j)] + bc.s[(i, j)] - bc.b_cov[(i, j)]).abs() < 1e-12);
            }
        }
        let b_up = &bc.a_inv * &bc.b_lower;
        let s_i = bc.s.transpose() * &b_up;
        let r_i = bc.r.transpose() * &b_up;
        let s_up = &bc.a_inv * &bc.s;
        prop_assert!((&s_i - &bc.s_i).amax() < 1e-12 * bc.s.amax().max(1.0) * 10.0);
        prop_assert!((&r_i - &bc.r_i).amax() < 1e-12 * bc.r.amax().max(1.0) * 10.0);
        prop_assert!((&s_up - &bc.s_up).amax() < 1e-12 * bc.s.amax().max(1.0) * 10.0);
        let b2 = bc.b_lower.dot(&b_up);
        prop_assert!(b2 >= 0.0 && (b2.sqrt() - bc.b_norm).abs() < 1e-12 * bc.b_norm.max(1.0) * 10.0);

        prop_assert!(metric_compatibility_residual(m, &p.x).unwrap() < 1e-6, "{}: ∇a", p.entry.name);
        if bc.b_norm > 0.1 {
            let res = beta_norm_gradient_check(m, &p.x).unwrap();
            let worst = res.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            prop_assert!(worst < 1e-5, "{}: norm gradient residual {worst}", p.entry.name);
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn volume_density_is_converged((index, seed, dir) in point_strategy()) {
        let Some(p) = catalog_point(index, seed, &dir) else { return Ok(()); };
        let (m, f) = (&p.entry.metric, &p.entry.phi);
        let base = SigmaGrid::default();
        let doubled = SigmaGrid {
            circle: 2 * base.circle,
            polar: 2 * base.polar,
            azimuth: 2 * base.azimuth,
        };
        let s1 = sigma_bh_with(m, f, &p.x, base).unwrap().sigma;
        let s2 = sigma_bh_with(m, f, &p.x, doubled).unwrap().sigma;
        prop_assert!(rel(s1, s2) < 1e-7, "{}: σ {s1} vs {s2}", p.entry.name);
    }

    /// A Euclidean-plane Killing form `b = (c₁ − κ x₂, c₂ + κ x₁)` has
    /// `r = 0`, `s₁₂ = −κ` and `|s_·| = |κ| b`, so `s_i = 0` with `b > 0`
    /// forces `s_ij = 0` in dimension two.
    #[test]
    fn planar_killing_forms_have_s_i_proportional_to_s_12(
        c1 in -1.0..1.0f64,
        c2 in -1.0..1.0f64,
        kappa in -1.0..1.0f64,
        x in prop::collection::vec(-0.5..0.5f64, 2),
    ) {
        let field = FnField::new(
            2,
            |_: &[f64]| DMatrix::identity(2, 2),
            move |p: &[f64]| DVector::from_vec(vec![c1 - kappa * p[1], c2 + kappa * p[0]]),
        );
        let domain = ChartDomain::Box { lo: vec![-1.0; 2], hi: vec![1.0; 2] };
        let m = MetricSpec::new(Arc::new(field), domain).unwrap();
        let bc = beta_derivatives(&m, &x).unwrap();
        prop_assert!(bc.r.amax() < 1e-9);
        prop_assert!((bc.s[(0, 1)] + kappa).abs() < 1e-9);
        let s_norm = bc.s_i.norm();
        prop_assert!((s_norm - kappa.abs() * bc.b_norm).abs() < 1e-9, "|s_i| {s_norm} vs |κ| b {}", kappa.abs() * bc.b_norm);
    }
}

#[test]
fn berwald_verdicts_imply_landsberg_douglas_and_s_zero() {
    let tol = Tolerances::default();
    for name in NAMES {
        let e = get_default(name).unwrap();
        let grid = domain_grid(&e.metric.domain, 3).unwrap();
        let dirs = directions(e.metric.n, 4).unwrap();
        let flags = curvature_flags(&e.metric, &e.phi, &grid, &dirs, &tol, SprayRoute::Generic).unwrap();
        if flags.berwald.verdict {
            assert!(flags.landsberg.residual < 10.0 * tol.tensor, "{name}: L {}", flags.landsberg.residual);
            assert!(flags.douglas.residual < 10.0 * tol.tensor, "{name}: D {}", flags.douglas.residual);
            assert!(flags.s_zero.residual < 10.0 * tol.s, "{name}: S {}", flags.s_zero.residual);
        }
    }
}
