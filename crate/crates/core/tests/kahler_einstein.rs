use ciconia::einstein::{
    beta_plus, fit_einstein_constant, form_real, make_family, max_abs, max_deviation,
    reality_defect, ricci_form, FamilyKind, FamilyParams, RicciRoute,
};
use ciconia::geometry4d::curvature;
use ciconia::kahler::{closedness_residual, instantiate_case, perturb, CaseId, CaseParams};
use ciconia::metric::{apply_j, bilinear, WeightTriple};
use ciconia::sampling::{sample_points, FibreRange};
use ciconia::{ConformalChart, Point4, C64};
use proptest::prelude::*;

/// Random parameters may leave the positive cone somewhere on the sample
/// region; those draws are discarded rather than failed.
fn admissible<T>(r: ciconia::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(ciconia::Error::PositivityViolation(_) | ciconia::Error::ParameterGate(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

fn closedness(chart: &ConformalChart, w: &WeightTriple, pts: &[Point4]) -> f64 {
    pts.iter()
        .map(|p| {
            let (r1, r2) = closedness_residual(chart, w, *p).unwrap();
            r1.norm().max(r2.norm())
        })
        .fold(0.0, f64::max)
}

fn params() -> CaseParams {
    CaseParams::default()
}

#[test]
fn instantiated_cases_sit_on_constant_curvature_charts() {
    for case in CaseId::NUMBERED {
        let chart = case.default_chart();
        let inst = instantiate_case(case, &params(), &chart).unwrap();
        let zs: Vec<C64> = inst.sample(&chart, 300, 4).iter().map(|p| p.z).collect();
        let (mean, std) = chart.curvature_statistics(&zs).unwrap();
        assert!(std < 1e-8, "case {case}");
        assert!((mean - inst.curvature).abs() < 1e-8);
    }
}

#[test]
fn perturbed_cases_lose_closedness() {
    for case in CaseId::NUMBERED {
        let chart = case.default_chart();
        let inst = instantiate_case(case, &params(), &chart).unwrap();
        let pts = inst.sample(&chart, 64, 8);
        for (label, w) in perturb(case.spec(), &inst.weights).unwrap() {
            let r = closedness(&chart, &w, &pts);
            assert!(r > 1e-4, "case {case}, {label}: {r:e}");
        }
    }
}

/// A numbered case's weights with Δ > 0, `ρ` by both routes against the
/// Ricci tensor of the real 4D metric: `Ric(J·, ·) = ρ`.
#[test]
fn ricci_form_matches_real_ricci_tensor() {
    let mut sources: Vec<(String, ConformalChart, WeightTriple, Vec<Point4>)> = Vec::new();
    for case in CaseId::NUMBERED.into_iter().filter(|c| !c.spec().pseudo) {
        let chart = case.default_chart();
        let inst = instantiate_case(case, &params(), &chart).unwrap();
        let pts = inst.sample(&chart, 20, 6);
        sources.push((format!("case {case}"), chart, inst.weights, pts));
    }
    for kind in FamilyKind::ALL {
        let chart = kind.default_chart();
        let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
        let pts = fam.sample(&chart, 20, 6);
        sources.push((kind.to_string(), chart, fam.weights, pts));
    }
    let basis: [[f64; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    let mut largest: f64 = 0.0;
    for (name, chart, w, pts) in &sources {
        for p in pts {
            let rho = form_real(&ricci_form(chart, w, *p, RicciRoute::DetH).unwrap());
            let cur = curvature(chart, w, *p).unwrap();
            let scale = cur.max_ricci().max(1.0);
            largest = largest.max(cur.max_ricci());
            for a in 0..4 {
                for b in 0..4 {
                    let ric = bilinear(&cur.ricci, &apply_j(&basis[a]), &basis[b]);
                    assert!(
                        (ric - rho[a][b]).abs() < 1e-6 * scale,
                        "{name} at {:?}: Ric(J{a},{b}) = {ric}, rho = {}",
                        p.coords(),
                        rho[a][b]
                    );
                }
            }
        }
    }
    // the comparison must not be between two zero tensors
    assert!(largest > 1e-2, "{largest}");
}

#[test]
fn routes_agree_on_500_samples() {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    let weights = [
        WeightTriple::sasaki(),
        WeightTriple::parse("2 + abs2(z)", "0.3*z", "1 + r2").unwrap(),
        WeightTriple::parse("3 + r2", "0.5 - 0.2*i", "exp(-r2) + 1").unwrap(),
    ];
    for (ci, chart) in [
        ConformalChart::flat(),
        ConformalChart::sphere(),
        ConformalChart::hyperbolic(),
    ]
    .iter()
    .enumerate()
    {
        for (wi, w) in weights.iter().enumerate() {
            let seed = (3 * ci + wi) as u64;
            for p in sample_points(chart, FibreRange::R2 { lo: 0.1, hi: 2.0 }, 56, seed, 1e-3) {
                let d = ricci_form(chart, w, p, RicciRoute::DetH).unwrap();
                let s = ricci_form(chart, w, p, RicciRoute::Split).unwrap();
                worst = worst.max(max_deviation(&d, &s));
                assert!(reality_defect(&d) < 1e-10);
                count += 1;
            }
        }
    }
    assert!(count >= 500);
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn ricci_flat_families_have_zero_scalar_and_einstein_constant() {
    for kind in FamilyKind::ALL {
        let chart = kind.default_chart();
        let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
        for p in fam.sample(&chart, 10, 3) {
            let cur = curvature(&chart, &fam.weights, p).unwrap();
            assert!(cur.scalar.abs() < 1e-6, "{kind}: {}", cur.scalar);
            let s = fit_einstein_constant(&chart, &fam.weights, p).unwrap();
            assert!(s.abs() < 1e-6, "{kind}: {s}");
        }
    }
}

fn arb_a() -> impl Strategy<Value = C64> {
    (0.1f64..3.0, 0.0f64..6.3).prop_map(|(r, t)| C64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beta_plus_is_the_positive_root(a in arb_a(), c0 in -5.0f64..5.0) {
        let b = beta_plus(a, c0);
        prop_assert!(b > 0.0);
        let q = a.norm_sqr() * b * b + c0 * b - 1.0;
        prop_assert!(q.abs() < 1e-12, "{q:e}");
    }

    #[test]
    fn case_iv_closed_for_any_slope_data(h in 0.5f64..4.0, f0 in 0.5f64..3.0, a in prop_oneof![
        Just("0"), Just("z"), Just("0.2*z^2 + 0.1"),
    ]) {
        let chart = ConformalChart::hyperbolic();
        let p = CaseParams { a: Some(a.to_string()), h: Some(format!("{h}")), f0: Some(f0), ..params() };
        let inst = admissible(instantiate_case(CaseId::IV, &p, &chart));
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        prop_assert!(closedness(&chart, &inst.weights, &inst.sample(&chart, 50, 1)) < 1e-9);
    }

    #[test]
    fn case_i_closed_for_polynomial_a(c in prop::array::uniform3(-1.0f64..1.0)) {
        let chart = ConformalChart::flat();
        let a = format!("{} + {}*z + {}*z^3", c[0], c[1], c[2]);
        let p = CaseParams { a: Some(a), ..params() };
        let inst = admissible(instantiate_case(CaseId::I, &p, &chart));
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        prop_assert!(closedness(&chart, &inst.weights, &inst.sample(&chart, 50, 2)) < 1e-9);
    }

    #[test]
    fn case_iii_closed_for_radial_h(k in 1.0f64..3.0, e in 0.1f64..2.0) {
        let chart = ConformalChart::flat();
        let p = CaseParams { h: Some(format!("{k} + exp(-{e}*r2)")), ..params() };
        let inst = admissible(instantiate_case(CaseId::III, &p, &chart));
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        prop_assert!(closedness(&chart, &inst.weights, &inst.sample(&chart, 50, 3)) < 1e-9);
    }

    #[test]
    fn families_are_kahler_and_ricci_flat(
        which in 0usize..5, a in arb_a(), c0 in 0.2f64..2.0, neg in any::<bool>(), f in 0.3f64..3.0,
    ) {
        let kind = FamilyKind::ALL[which];
        // cy-iii and cy-iv accept either sign of c₀
        let c0 = if neg && matches!(kind, FamilyKind::CyIII | FamilyKind::CyIV) { -c0 } else { c0 };
        let a = if kind == FamilyKind::CyII { C64::new(0.0, 0.0) } else { a };
        let chart = kind.default_chart();
        let params = FamilyParams { a: Some(a), c0: Some(c0), f: Some(f) };
        let fam = admissible(make_family(kind, &params, &chart));
        prop_assume!(fam.is_some());
        let fam = fam.unwrap();
        for p in fam.sample(&chart, 20, 5) {
            let (r1, r2) = closedness_residual(&chart, &fam.weights, p).unwrap();
            prop_assert!(r1.norm().max(r2.norm()) < 1e-9, "{kind}");
            let d = ricci_form(&chart, &fam.weights, p, RicciRoute::DetH).unwrap();
            let s = ricci_form(&chart, &fam.weights, p, RicciRoute::Split).unwrap();
            prop_assert!(max_abs(&d) < 1e-8, "{kind}: {:e}", max_abs(&d));
            prop_assert!(max_deviation(&d, &s) < 1e-9);
            let r2v = chart.lambda_value(p.z).unwrap() * p.w.norm_sqr();
            prop_assert!((fam.psi(r2v).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn cy_ii_is_the_a_to_zero_limit_of_cy_iii() {
    let sphere = ConformalChart::sphere();
    let c0 = 1.5;
    let ii = make_family(
        FamilyKind::CyII,
        &FamilyParams { a: None, c0: Some(c0), f: None },
        &sphere,
    )
    .unwrap();
    let iii = make_family(
        FamilyKind::CyIII,
        &FamilyParams {
            a: Some(C64::new(1e-5, 0.0)),
            c0: Some(c0),
            f: None,
        },
        &sphere,
    )
    .unwrap();
    assert!((ii.domain.1 - iii.domain.1).abs() < 1e-6);
    for r2 in [0.05, 0.2, 0.4, 0.6] {
        let (f2, h2) = ii.radial_values(r2).unwrap();
        let (f3, h3) = iii.radial_values(r2).unwrap();
        assert!((f2 - f3).abs() < 1e-6 * f2 && (h2 - h3).abs() < 1e-6 * h2);
    }
}

/// Near the disk edge and the end of the fibre interval H is badly
/// conditioned in the `(z, w)` frame; the routes must still agree.
#[test]
fn routes_agree_where_h_is_ill_conditioned() {
    for kind in [FamilyKind::RicciFlatGeneral, FamilyKind::CyIV] {
        let chart = kind.default_chart();
        let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
        for zr in [0.5, 0.85, 0.95] {
            for gap in [0.03, 0.015] {
                let lam = chart.lambda_value(C64::new(zr, 0.0)).unwrap();
                let ws = (fam.domain.0 * (1.0 + gap) / lam).sqrt();
                let p = Point4::new(C64::new(zr, 0.0), C64::new(0.6 * ws, 0.8 * ws));
                let d = ricci_form(&chart, &fam.weights, p, RicciRoute::DetH).unwrap();
                let s = ricci_form(&chart, &fam.weights, p, RicciRoute::Split).unwrap();
                assert!(max_deviation(&d, &s) < 1e-9, "{kind} |z| {zr} gap {gap}: {:e}", max_deviation(&d, &s));
                assert!(max_abs(&d) < 1e-8);
            }
        }
    }
}
