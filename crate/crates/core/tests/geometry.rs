#![allow(clippy::needless_range_loop)]

use ciconia::einstein::{make_family, FamilyKind, FamilyParams};
use ciconia::geometry4d::{
    completeness, curvature, fibre_length, geodesic, length_profile, Distance, ExitReason,
    StepControl, Verdict,
};
use ciconia::kahler::{flat_example, instantiate_case, CaseId, CaseParams};
use ciconia::metric::WeightTriple;
use ciconia::sampling::{sample_points, FibreRange};
use ciconia::{ConformalChart, Expression, Point4, C64};

const UNBOUNDED: (f64, f64) = (0.0, f64::INFINITY);

#[test]
fn curvature_identities_on_200_samples() {
    let mut sources: Vec<(ConformalChart, WeightTriple, Vec<Point4>)> = vec![];
    for chart in [ConformalChart::sphere(), ConformalChart::hyperbolic()] {
        let pts = sample_points(&chart, FibreRange::R2 { lo: 0.1, hi: 3.0 }, 40, 7, 1e-3);
        sources.push((chart.clone(), WeightTriple::sasaki(), pts.clone()));
        let w = WeightTriple::parse("2 + r2", "0.3*z + 0.1*i", "1 + abs2(z)").unwrap();
        sources.push((chart, w, pts));
    }
    let chart = ConformalChart::sphere();
    let fam = make_family(FamilyKind::CyIII, &FamilyParams::default(), &chart).unwrap();
    let pts = fam.sample(&chart, 40, 7);
    sources.push((chart, fam.weights, pts));

    let mut n = 0;
    for (chart, w, pts) in &sources {
        for p in pts {
            let c = curvature(chart, w, *p).unwrap();
            let scale = c.max_riemann().max(1.0);
            assert!(c.bianchi_defect() < 1e-6 * scale, "{}", c.bianchi_defect());
            assert!(c.antisymmetry_defect() < 1e-8 * scale);
            assert!(c.ricci_asymmetry() < 1e-8 * scale);
            n += 1;
        }
    }
    assert_eq!(n, 200);
}

/// Flat Sasaki is Euclidean 4-space; the holomorphic example is flat too.
#[test]
fn flat_metrics_have_no_curvature() {
    let flat = ConformalChart::flat();
    let pts = sample_points(&flat, FibreRange::Square { half_width: 2.0 }, 50, 1, 1e-3);
    for p in &pts {
        assert!(curvature(&flat, &WeightTriple::sasaki(), *p).unwrap().max_riemann() < 1e-12);
    }
    let w = flat_example(&Expression::parse("z^2").unwrap()).unwrap();
    for p in &pts {
        assert!(curvature(&flat, &w, *p).unwrap().max_riemann() < 1e-6);
    }
}

#[test]
fn flat_case_i_has_curvature_with_non_constant_f() {
    // f − |a|² not constant: still Kähler, no longer flat
    let flat = ConformalChart::flat();
    let params = CaseParams {
        a: Some("z".into()),
        f: Some("2 + abs2(z)^2".into()),
        ..Default::default()
    };
    let inst = instantiate_case(CaseId::I, &params, &flat).unwrap();
    let p = inst.sample(&flat, 1, 0)[0];
    assert!(curvature(&flat, &inst.weights, p).unwrap().max_riemann() > 1e-3);
}

#[test]
fn flat_sasaki_geodesic_is_a_line() {
    let flat = ConformalChart::flat();
    let p = Point4::from_real(0.1, -0.2, 0.3, 0.4);
    let v = [1.0, 0.0, 1.0, 0.0];
    let tr = geodesic(&flat, &WeightTriple::sasaki(), UNBOUNDED, p, v, 5.0, StepControl::default())
        .unwrap();
    assert_eq!(tr.exit, ExitReason::Completed);
    for s in &tr.states {
        for k in 0..4 {
            assert!((s.position[k] - (p.coords()[k] + v[k] * s.t)).abs() < 1e-10);
        }
    }
}

#[test]
fn sphere_sasaki_energy_is_conserved() {
    let sphere = ConformalChart::sphere();
    let p = Point4::from_real(0.3, 0.1, 0.5, -0.2);
    let tr = geodesic(
        &sphere,
        &WeightTriple::sasaki(),
        UNBOUNDED,
        p,
        [0.4, -0.3, 0.2, 0.5],
        10.0,
        StepControl::default(),
    )
    .unwrap();
    assert_eq!(tr.exit, ExitReason::Completed);
    assert!(tr.energy_drift < 1e-7, "{:e}", tr.energy_drift);
    assert!(tr.drift_rate() < 1e-8);
}

#[test]
fn reversed_geodesic_retraces() {
    let chart = ConformalChart::hyperbolic();
    let w = WeightTriple::parse("2 + r2", "0.3", "1").unwrap();
    let p = Point4::from_real(0.1, 0.2, 0.6, -0.3);
    let fwd = geodesic(&chart, &w, UNBOUNDED, p, [0.2, 0.1, -0.3, 0.4], 3.0, StepControl::default())
        .unwrap();
    assert_eq!(fwd.exit, ExitReason::Completed);
    let end = fwd.last();
    let back_v = end.velocity.map(|x| -x);
    let [x, y, s, t] = end.position;
    let back = geodesic(
        &chart,
        &w,
        UNBOUNDED,
        Point4::from_real(x, y, s, t),
        back_v,
        3.0,
        StepControl::default(),
    )
    .unwrap();
    let q = back.last().position;
    for k in 0..4 {
        assert!((q[k] - p.coords()[k]).abs() < 1e-7, "{q:?}");
    }
}

#[test]
fn fibre_length_matches_closed_forms() {
    let flat = ConformalChart::flat();
    let z = C64::new(0.2, 0.1);
    let l = fibre_length(&flat, &WeightTriple::sasaki(), z, 0.5, 3.0).unwrap();
    assert!((l - 2.5).abs() < 1e-10);
    // √h = 1/r² integrates to 1/ra − 1/rb
    let w = WeightTriple::parse("1", "0", "1/r2^2").unwrap();
    let l = fibre_length(&flat, &w, z, 0.5, 4.0).unwrap();
    assert!((l - 1.75).abs() < 1e-9);
    // the base factor enters through r² = λ|w|² only
    let sphere = ConformalChart::sphere();
    let l = fibre_length(&sphere, &w, C64::new(0.7, 0.0), 0.5, 4.0).unwrap();
    assert!((l - 1.75).abs() < 1e-9);
}

#[test]
fn family_verdicts_and_exponents() {
    let expected = [
        (FamilyKind::CyI, Verdict::Complete, (-2.0, 0.0)),
        (FamilyKind::CyII, Verdict::CompleteAwayFromZeroSection, (-1.5, -0.25)),
        (FamilyKind::CyIII, Verdict::CompleteAwayFromZeroSection, (-1.5, -0.25)),
        (FamilyKind::CyIV, Verdict::CompleteWithBoundaryAdded, (-0.25, -0.5)),
    ];
    for (kind, verdict, (inner, outer)) in expected {
        let chart = kind.default_chart();
        let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
        let rep = completeness(&chart, &fam.weights, C64::new(0.1, 0.0), fam.domain).unwrap();
        assert_eq!(rep.verdict, verdict, "{kind}");
        let close = |got: f64, want: f64| (got - want).abs() <= 0.05 * want.abs().max(1.0);
        assert!(close(rep.inner.exponent, inner), "{kind}: {}", rep.inner.exponent);
        assert!(close(rep.outer.exponent, outer), "{kind}: {}", rep.outer.exponent);
    }
}

#[test]
fn cy_iv_inner_boundary_is_at_finite_distance() {
    let chart = ConformalChart::hyperbolic();
    let fam = make_family(FamilyKind::CyIV, &FamilyParams::default(), &chart).unwrap();
    let rep = completeness(&chart, &fam.weights, C64::new(0.0, 0.0), fam.domain).unwrap();
    assert_eq!(rep.inner.distance, Distance::Finite);
    assert_eq!(rep.outer.distance, Distance::Infinite);
    let profile = length_profile(&chart, &fam.weights, C64::new(0.0, 0.0), fam.domain, 16).unwrap();
    assert_eq!(profile.len(), 16);
    assert_eq!(profile[0].cumulative, 0.0);
    assert!(profile.windows(2).all(|w| w[1].cumulative > w[0].cumulative && w[1].r > w[0].r));
}
