use anyhow::Result;
use ciconia::bundle::{dr2_identity_residual, eta_02_residual, nabla_star_table_residual};
use ciconia::einstein::{
    einstein_residuals, einstein_residuals_from, fit_einstein_constant, max_abs, max_deviation,
    ricci_form_from, ricci_report, RicciRoute,
};
use ciconia::geometry4d::curvature;
use ciconia::kahler::closedness_residual;
use ciconia::metric::local_jets;
use ciconia::sampling::{sample_points, FibreRange};
use ciconia::surface::{verify_transition, ChartTransition};
use ciconia::{ConformalChart, Point4};
use serde::Serialize;

use super::{aggregate, evaluate, first_error};
use crate::args::Subject;
use crate::config::{ChartSpec, RunConfig};
use crate::report::Report;
use crate::setup::{chart_from, Setup};

const TABLE_ROWS: usize = 10;

pub fn run(subject: Subject, cfg: &RunConfig, s: Option<f64>) -> Result<Report> {
    match subject {
        Subject::Kahler => kahler(cfg),
        Subject::RicciFlat => ricci_flat(cfg),
        Subject::Einstein => einstein(cfg, s),
        Subject::Transitions => transitions(cfg),
        Subject::NablaTables => nabla_tables(cfg),
    }
}

#[derive(Serialize)]
struct ResidualRow {
    point: [f64; 4],
    res1: f64,
    res2: f64,
}

fn kahler(cfg: &RunConfig) -> Result<Report> {
    let setup = Setup::from_config(cfg)?;
    let (chart, w) = (&setup.chart, setup.weights());
    let pts = setup.samples(cfg);
    let tol = &cfg.tolerances;
    let res = evaluate(&pts, |p| closedness_residual(chart, w, p));

    let mut report = Report::new("verify kahler", cfg);
    report.push(aggregate("closedness", tol.closedness, &pts, &res, |(a, b)| {
        a.norm().max(b.norm())
    }));
    let zs: Vec<_> = pts.iter().map(|p| p.z).collect();
    let (mean, std) = chart.curvature_statistics(&zs)?;
    report.push_value("curvature-std", std, tol.curvature_std);

    let r1 = aggregate("res1", tol.closedness, &pts, &res, |(a, _)| a.norm());
    let r2 = aggregate("res2", tol.closedness, &pts, &res, |(_, b)| b.norm());
    let table: Vec<ResidualRow> = pts
        .iter()
        .zip(&res)
        .filter_map(|(p, r)| {
            r.as_ref().ok().map(|(a, b)| ResidualRow {
                point: p.coords(),
                res1: a.norm(),
                res2: b.norm(),
            })
        })
        .take(TABLE_ROWS)
        .collect();
    report.detail("source", setup.describe())?;
    report.detail("curvature", mean)?;
    report.detail("res1_max", r1.max_residual)?;
    report.detail("res2_max", r2.max_residual)?;
    report.detail("residual_table", table)?;
    if let Some(e) = first_error(&res) {
        report.detail("first_error", e)?;
    }
    Ok(report)
}

struct RicciSample {
    rho: f64,
    route: f64,
    reality: f64,
    closed: f64,
    ricci_4d: f64,
}

fn ricci_flat(cfg: &RunConfig) -> Result<Report> {
    let setup = Setup::from_config(cfg)?;
    let (chart, w) = (&setup.chart, setup.weights());
    let pts = setup.samples(cfg);
    let tol = &cfg.tolerances;
    let res = evaluate(&pts, |p| {
        let rep = ricci_report(chart, w, p, 0.0)?;
        let (r1, r2) = closedness_residual(chart, w, p)?;
        Ok(RicciSample {
            rho: max_abs(&rep.rho),
            route: rep.route_deviation,
            reality: rep.reality_defect,
            closed: r1.norm().max(r2.norm()),
            ricci_4d: curvature(chart, w, p)?.max_ricci(),
        })
    });
    let mut report = Report::new("verify ricci-flat", cfg);
    report.push(aggregate("closedness", tol.closedness, &pts, &res, |r| r.closed));
    report.push(aggregate("ricci-form", tol.ricci_form, &pts, &res, |r| r.rho));
    report.push(aggregate("route-agreement", tol.route_agreement, &pts, &res, |r| r.route));
    report.push(aggregate("reality", tol.reality, &pts, &res, |r| r.reality));
    report.push(aggregate("ricci-4d", tol.ricci_4d, &pts, &res, |r| r.ricci_4d));
    if let Some(fam) = setup.family() {
        let psi = evaluate(&pts, |p| {
            let r2 = chart.lambda_value(p.z)? * p.w.norm_sqr();
            Ok((fam.psi(r2)? - 1.0).abs())
        });
        report.push(aggregate("psi", tol.psi, &pts, &psi, |v| *v));
        report.detail("domain", fam.domain)?;
    }
    report.detail("source", setup.describe())?;
    if let Some(e) = first_error(&res) {
        report.detail("first_error", e)?;
    }
    Ok(report)
}

struct EinsteinSample {
    s: f64,
    residual: f64,
    route: f64,
    scalar: f64,
}

fn einstein(cfg: &RunConfig, given: Option<f64>) -> Result<Report> {
    let setup = Setup::from_config(cfg)?;
    let (chart, w) = (&setup.chart, setup.weights());
    let pts = setup.samples(cfg);
    let tol = &cfg.tolerances;
    let res = evaluate(&pts, |p| {
        let l = local_jets(chart, w, p)?;
        let s = match given {
            Some(s) => s,
            None => fit_einstein_constant(chart, w, p)?,
        };
        let e = einstein_residuals_from(chart, &l, p, s)?;
        let d = ricci_form_from(chart, &l, p, RicciRoute::DetH)?;
        let sp = ricci_form_from(chart, &l, p, RicciRoute::Split)?;
        Ok(EinsteinSample {
            s,
            residual: e.iter().map(|c| c.norm()).fold(0.0, f64::max),
            route: max_deviation(&d, &sp),
            scalar: curvature(chart, w, p)?.scalar,
        })
    });
    // a single constant for the whole sample set: the given one or the
    // mean of the pointwise fits
    let fitted: Vec<f64> = res.iter().filter_map(|r| r.as_ref().ok().map(|e| e.s)).collect();
    let s = given.unwrap_or_else(|| fitted.iter().sum::<f64>() / fitted.len().max(1) as f64);
    let spread = fitted.iter().map(|x| (x - s).abs()).fold(0.0, f64::max);

    let at_s = evaluate(&pts, |p| {
        let e = einstein_residuals(chart, w, p, s)?;
        Ok(e.iter().map(|c| c.norm()).fold(0.0, f64::max))
    });
    let mut report = Report::new("verify einstein", cfg);
    report.push(aggregate("einstein", tol.einstein, &pts, &at_s, |v| *v));
    report.push(aggregate("route-agreement", tol.route_agreement, &pts, &res, |r| r.route));
    report.push(aggregate("scalar", tol.scalar, &pts, &res, |r| (r.scalar - s).abs()));
    report.detail("source", setup.describe())?;
    report.detail("S", s)?;
    report.detail("S_fitted", given.is_none())?;
    report.detail("S_spread", spread)?;
    report.detail(
        "pointwise_residual_max",
        res.iter().filter_map(|r| r.as_ref().ok().map(|e| e.residual)).fold(0.0, f64::max),
    )?;
    if let Some(e) = first_error(&res) {
        report.detail("first_error", e)?;
    }
    Ok(report)
}

fn chart_or_sphere(cfg: &RunConfig) -> Result<ConformalChart> {
    match &cfg.chart {
        Some(spec) => chart_from(spec),
        None => chart_from(&ChartSpec::Model("sphere".into())),
    }
}

fn base_points(chart: &ConformalChart, cfg: &RunConfig) -> Vec<Point4> {
    sample_points(chart, FibreRange::Square { half_width: 2.0 }, cfg.samples(), cfg.seed(), 1e-3)
}

fn transitions(cfg: &RunConfig) -> Result<Report> {
    let chart = chart_or_sphere(cfg)?;
    let tol = &cfg.tolerances;
    // the inversion is not defined at the origin of the chart
    let pts: Vec<Point4> = base_points(&chart, cfg)
        .into_iter()
        .filter(|p| p.z.norm() > 0.1)
        .collect();
    let t = ChartTransition::inversion();
    let res = evaluate(&pts, |p| verify_transition(&t, &chart, &chart, &[p]));
    let mut report = Report::new("verify transitions", cfg);
    report.push(aggregate("transition", tol.transition, &pts, &res, |r| r.max()));
    for (name, get) in [
        ("transition-lambda", (|r: &ciconia::surface::TransitionReport| r.lambda) as fn(&_) -> f64),
        ("transition-gamma", |r| r.gamma),
        ("transition-fibre", |r| r.fibre),
        ("transition-eta", |r| r.eta),
    ] {
        report.push(aggregate(name, tol.transition, &pts, &res, get));
    }
    report.detail("chart", chart.name())?;
    report.detail("excluded_near_origin", cfg.samples() - pts.len())?;
    Ok(report)
}

fn nabla_tables(cfg: &RunConfig) -> Result<Report> {
    let chart = chart_or_sphere(cfg)?;
    let tol = &cfg.tolerances;
    let pts = base_points(&chart, cfg);
    let res = evaluate(&pts, |p| {
        Ok((
            dr2_identity_residual(&chart, p)?,
            nabla_star_table_residual(&chart, p)?.max(),
            eta_02_residual(&chart, p)?,
        ))
    });
    let mut report = Report::new("verify nabla-tables", cfg);
    report.push(aggregate("dr2", tol.dr2, &pts, &res, |r| r.0));
    report.push(aggregate("nabla", tol.nabla, &pts, &res, |r| r.1));
    report.push(aggregate("eta02", tol.eta02, &pts, &res, |r| r.2));
    report.detail("chart", chart.name())?;
    Ok(report)
}
