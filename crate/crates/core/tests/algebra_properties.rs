use finsler_core::exprparse::{parse, Expr};
use finsler_core::phi::{ab_scalars, q_derivatives, PhiFamily};
use finsler_core::JetScalar;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

const VARS: [&str; 2] = ["u", "v"];

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(42),
        ..ProptestConfig::default()
    }
}

/// Smooth expressions in `u`, `v` that stay bounded on `[-1, 1]²`.
fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("u".to_string()),
        Just("v".to_string()),
        (-2.0..2.0f64).prop_map(|c| format!("({c:.3})")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3 * sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            inner.prop_map(|a| format!("({a}) / (2 + sin({a}))")),
        ]
    })
}

fn eval_at(e: &Expr, u: f64, v: f64) -> f64 {
    e.eval_real(&[("u", u), ("v", v)]).unwrap()
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// `∂^α p` of `Σ c_ij u^i v^j` at `(u, v)`.
fn poly_partial(c: &[[f64; 5]; 5], u: f64, v: f64, a: usize, b: usize) -> f64 {
    let falling = |k: usize, m: usize| -> f64 { ((k - m + 1)..=k).map(|t| t as f64).product() };
    let mut acc = 0.0;
    for i in a..5 {
        for j in b..5 {
            if i + j > 4 {
                continue;
            }
            acc += c[i][j] * falling(i, a) * falling(j, b) * u.powi((i - a) as i32) * v.powi((j - b) as i32);
        }
    }
    acc
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn jet_derivatives_match_central_differences(text in smooth_expr(), u in -1.0..1.0f64, v in -1.0..1.0f64) {
        let e = Expr::parse(&text, &VARS).unwrap();
        let vars = JetScalar::variables(&[u, v], 2).unwrap();
        let jet = e.eval_jet(&[("u", vars[0].clone()), ("v", vars[1].clone())], &vars[0]).unwrap();
        let f0 = eval_at(&e, u, v);
        prop_assert_eq!(jet.value(), f0);

        let h1 = 1e-5;
        let du = (eval_at(&e, u + h1, v) - eval_at(&e, u - h1, v)) / (2.0 * h1);
        let dv = (eval_at(&e, u, v + h1) - eval_at(&e, u, v - h1)) / (2.0 * h1);
        prop_assert!(close(jet.partial_of(&[0]), du, 1e-6, 1e-8), "{text}: du {} vs {du}", jet.partial_of(&[0]));
        prop_assert!(close(jet.partial_of(&[1]), dv, 1e-6, 1e-8), "{text}: dv {} vs {dv}", jet.partial_of(&[1]));

        let h2 = 1e-4;
        let duu = (eval_at(&e, u + h2, v) - 2.0 * f0 + eval_at(&e, u - h2, v)) / (h2 * h2);
        let dvv = (eval_at(&e, u, v + h2) - 2.0 * f0 + eval_at(&e, u, v - h2)) / (h2 * h2);
        let duv = (eval_at(&e, u + h2, v + h2) - eval_at(&e, u + h2, v - h2) - eval_at(&e, u - h2, v + h2)
            + eval_at(&e, u - h2, v - h2))
            / (4.0 * h2 * h2);
        let scale = f0.abs().max(1.0);
        prop_assert!(close(jet.partial_of(&[0, 0]), duu, 1e-6, 1e-6 * scale), "{text}: duu {} vs {duu}", jet.partial_of(&[0, 0]));
        prop_assert!(close(jet.partial_of(&[1, 1]), dvv, 1e-6, 1e-6 * scale), "{text}: dvv {} vs {dvv}", jet.partial_of(&[1, 1]));
        prop_assert!(close(jet.partial_of(&[0, 1]), duv, 1e-6, 1e-6 * scale), "{text}: duv {} vs {duv}", jet.partial_of(&[0, 1]));
    }

    #[test]
    fn printed_form_reparses_to_the_same_tree(text in smooth_expr()) {
        let ast = parse(&text, &VARS).unwrap();
        let printed = ast.to_string();
        let again = parse(&printed, &VARS).unwrap();
        prop_assert_eq!(&ast, &again);
        prop_assert_eq!(printed, again.to_string());
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn polynomials_are_exact(
        coeffs in prop::array::uniform5(prop::array::uniform5(-3.0..3.0f64)),
        u in -1.5..1.5f64,
        v in -1.5..1.5f64,
    ) {
        let vars = JetScalar::variables(&[u, v], 4).unwrap();
        let mut p = vars[0].lift(0.0);
        for (i, row) in coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if i + j > 4 {
                    continue;
                }
                let term = vars[0].powi(i as i32).unwrap().try_mul(&vars[1].powi(j as i32).unwrap()).unwrap();
                p = p.try_add(&term.scale(c)).unwrap();
            }
        }
        for a in 0..=4usize {
            for b in 0..=(4 - a) {
                let got = p.partial(&[a as u8, b as u8]);
                let want = poly_partial(&coeffs, u, v, a, b);
                prop_assert!((got - want).abs() < 1e-12 * want.abs().max(1.0) * 10.0, "∂({a},{b}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn products_follow_the_convolution_rule(
        a in prop::collection::vec(-2.0..2.0f64, 10),
        b in prop::collection::vec(-2.0..2.0f64, 10),
    ) {
        let fa = JetScalar::from_coeffs(a, 2, 3).unwrap();
        let fb = JetScalar::from_coeffs(b, 2, 3).unwrap();
        let prod = fa.try_mul(&fb).unwrap();
        for alpha in prod.multi_indices() {
            let mut want = 0.0;
            for beta in fa.multi_indices() {
                if beta.iter().zip(alpha).all(|(x, y)| x <= y) {
                    let rest: Vec<u8> = alpha.iter().zip(beta).map(|(x, y)| x - y).collect();
                    want += fa.coeff(beta) * fb.coeff(&rest);
                }
            }
            prop_assert!((prod.coeff(alpha) - want).abs() < 1e-12, "{alpha:?}");
        }
    }

    #[test]
    fn unicorn_q_is_linear_plus_semicircle(
        b0 in 0.3..1.5f64,
        k in -1.0..1.0f64,
        q in 0.1..2.0f64,
    ) {
        prop_assume!(1.0 - k.abs() * b0 * b0 - 0.5 * q * b0 * b0 > 0.1);
        let f = PhiFamily::unicorn(b0, k, q, 1.0).unwrap();
        for j in 0..21 {
            let s = b0 * 0.9 * (-1.0 + 0.1 * j as f64);
            let (qs, _, _) = q_derivatives(&f, s).unwrap();
            let want = k * s + q * (b0 * b0 - s * s).sqrt();
            prop_assert!((qs - want).abs() < 1e-8, "s = {s}: {qs} vs {want}");
        }
    }

    #[test]
    fn phi_derivatives_match_central_differences(family in 0usize..4, s in -0.5..0.5f64, k in 0.2..2.0f64) {
        let f = match family {
            0 => PhiFamily::Randers,
            1 => PhiFamily::RiemannSqrt { k },
            2 => PhiFamily::unicorn(1.0, k - 1.0, k, 1.0).unwrap(),
            _ => PhiFamily::custom("exp(p1 * s) + s^2", &[k]).unwrap(),
        };
        let [_, d1, d2, d3] = f.eval(s).unwrap();
        let h = 1e-4;
        let fd = |t: f64| f.eval(t).unwrap();
        let n1 = (fd(s + h)[0] - fd(s - h)[0]) / (2.0 * h);
        let n2 = (fd(s + h)[1] - fd(s - h)[1]) / (2.0 * h);
        let n3 = (fd(s + h)[2] - fd(s - h)[2]) / (2.0 * h);
        prop_assert!(close(d1, n1, 1e-6, 1e-8), "φ′ {d1} vs {n1}");
        prop_assert!(close(d2, n2, 1e-6, 1e-8), "φ″ {d2} vs {n2}");
        prop_assert!(close(d3, n3, 1e-6, 1e-8), "φ‴ {d3} vs {n3}");
        let b = 0.9;
        prop_assert_eq!(ab_scalars(&f, b, s, 2).unwrap(), ab_scalars(&f, b, s, 2).unwrap());
    }
}
