#![allow(clippy::needless_range_loop)]

use ciconia::jets::{fd_crosscheck, Wirtinger};
use ciconia::{ConformalChart, Expression, Point4, C64};
use proptest::prelude::*;

/// Random smooth expressions in `z, zbar, w, wbar`. Denominators are kept
/// away from zero and exponentials are damped so every draw is well
/// conditioned on the unit box.
fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("z".to_string()),
        Just("zbar".to_string()),
        Just("w".to_string()),
        Just("wbar".to_string()),
        (1u32..20).prop_map(|n| format!("{}", n as f64 / 10.0)),
        (1u32..20).prop_map(|n| format!("({}*i)", n as f64 / 10.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (2 + abs2({b})))")),
            inner.clone().prop_map(|a| format!("exp(0.3 * {a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + abs2({a}))")),
            inner.clone().prop_map(|a| format!("log(1 + abs2({a}))")),
            (inner, 2i32..4).prop_map(|(a, n)| format!("({a})^{n}")),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = Point4> {
    (-0.8f64..0.8, -0.8f64..0.8, -0.8f64..0.8, -0.8f64..0.8)
        .prop_map(|(x, y, s, t)| Point4::from_real(x, y, s, t))
}

fn arb_radial() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("r2".to_string()),
        Just("r2^2 + 3*r2".to_string()),
        Just("exp(-r2)".to_string()),
        Just("1/(1 + r2)".to_string()),
        Just("sqrt(1 + r2^2)".to_string()),
        Just("log(2 + r2)".to_string()),
        Just("(1 + r2^3)/(r2 + 2)".to_string()),
    ]
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn jets_match_finite_differences(src in arb_expr(), p in arb_point()) {
        let e = Expression::parse(&src).unwrap();
        let chart = ConformalChart::flat();
        let dev = fd_crosscheck(|q| e.eval(q, &chart), p, 1e-4).unwrap();
        prop_assert!(dev < 1e-6, "{src}: {dev:e}");
    }

    #[test]
    fn laplacian_of_real_expression_is_real(src in arb_expr(), p in arb_point()) {
        let e = Expression::parse(&format!("abs2({src}) + ({src}) + conj({src})")).unwrap();
        let j = e.eval(p, &ConformalChart::flat()).unwrap();
        let lap = j.wirtinger2(Wirtinger::Z, Wirtinger::Zbar);
        prop_assert!(lap.im.abs() <= 1e-12 * lap.norm().max(1.0), "{}", lap.im);
        let lap_w = j.wirtinger2(Wirtinger::W, Wirtinger::Wbar);
        prop_assert!(lap_w.im.abs() <= 1e-12 * lap_w.norm().max(1.0));
    }

    #[test]
    fn hessian_is_symmetric(src in arb_expr(), p in arb_point()) {
        let j = Expression::parse(&src).unwrap().eval(p, &ConformalChart::flat()).unwrap();
        let m = j.hessian_matrix();
        for i in 0..4 {
            for k in 0..4 {
                prop_assert_eq!(m[i][k], m[k][i]);
            }
        }
    }

    #[test]
    fn display_round_trips(src in arb_expr()) {
        let e = Expression::parse(&src).unwrap();
        let again = Expression::parse(&e.to_string()).unwrap();
        prop_assert_eq!(e, again);
    }

    #[test]
    fn radial_chain_rule(
        src in arb_radial(),
        chart in prop_oneof![
            Just(ConformalChart::flat()),
            Just(ConformalChart::sphere()),
            Just(ConformalChart::hyperbolic()),
        ],
        zr in 0.0f64..0.6,
        zarg in 0.0f64..std::f64::consts::TAU,
        wr in 0.2f64..1.2,
        warg in 0.0f64..std::f64::consts::TAU,
    ) {
        let p = Point4::new(C64::from_polar(zr, zarg), C64::from_polar(wr, warg));
        let e = Expression::parse(&src).unwrap();
        let j = e.eval(p, &chart).unwrap();
        let lambda = chart.lambda_value(p.z).unwrap();
        let gamma = chart.gamma(p.z).unwrap();
        let r2 = lambda * p.w.norm_sqr();
        let d = e.radial_derivatives(r2).unwrap()[1];

        let dw = j.wirtinger(Wirtinger::W);
        prop_assert!(rel(dw, d * lambda * p.w.conj()) < 1e-9);
        let dz = j.wirtinger(Wirtinger::Z);
        prop_assert!(rel(dz, p.w * gamma * dw) < 1e-9);
        // ∂φ/∂z = φ' (∂λ/∂z) |w|² with ∂λ/∂z = λΓ
        prop_assert!(rel(dz, d * lambda * gamma * p.w.norm_sqr()) < 1e-9);
    }
}

#[test]
fn radial_classification() {
    let e = Expression::parse("exp(-r2) + r2^2").unwrap();
    assert!(e.classify().is_radial());
    assert!(e.radial_derivatives(1.0).is_ok());
    let b = Expression::parse("z*zbar").unwrap();
    assert!(b.radial_derivatives(1.0).is_err());
}

#[test]
fn pole_is_reported() {
    let e = Expression::parse("1/(z - z)").unwrap();
    let p = Point4::from_real(0.1, 0.2, 0.3, 0.4);
    assert!(matches!(
        e.eval(p, &ConformalChart::flat()),
        Err(ciconia::Error::Pole(_))
    ));
}
