use std::collections::BTreeMap;

use anyhow::Result;
use ciconia::einstein::{max_abs, ricci_report};
use ciconia::geometry4d::curvature;
use ciconia::metric::{signature, Signature, WeightTriple};
use ciconia::{ConformalChart, Point4, C64};
use rayon::prelude::*;

use super::{aggregate, evaluate};
use crate::args::Quantity;
use crate::config::{Axis, RunConfig};
use crate::report::{csv_number, write_csv, Report};
use crate::setup::{chart_from, Setup};

fn axis(a: Option<Axis>, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    a.unwrap_or(Axis { lo, hi, n }).values()
}

fn coordinate_grid(cfg: &RunConfig) -> Vec<Point4> {
    let g = &cfg.grid;
    let xs = axis(g.x, -0.5, 0.5, 11);
    let ys = axis(g.y, -0.5, 0.5, 11);
    let ss = axis(g.s, 0.5, 0.5, 1);
    let ts = axis(g.t, 0.0, 0.0, 1);
    let mut out = Vec::with_capacity(xs.len() * ys.len() * ss.len() * ts.len());
    for &x in &xs {
        for &y in &ys {
            for &s in &ss {
                for &t in &ts {
                    out.push(Point4::new(C64::new(x, y), C64::new(s, t)));
                }
            }
        }
    }
    out
}

fn has_source(cfg: &RunConfig) -> bool {
    cfg.weights.is_some() || cfg.case.is_some() || cfg.family.is_some()
}

/// Chart of a sweep: the source's chart when there is one, else the
/// configured chart, else the flat plane.
fn sweep_chart(cfg: &RunConfig) -> Result<ConformalChart> {
    if has_source(cfg) {
        return Ok(Setup::from_config(cfg)?.chart);
    }
    match &cfg.chart {
        Some(spec) => chart_from(spec),
        None => Ok(ConformalChart::flat()),
    }
}

fn coordinate_rows(pts: &[Point4], values: &[ciconia::Result<f64>]) -> Vec<Vec<String>> {
    pts.iter()
        .zip(values)
        .map(|(p, v)| {
            let mut row: Vec<String> = p.coords().into_iter().map(csv_number).collect();
            row.push(match v {
                Ok(v) => csv_number(*v),
                Err(_) => "NA".into(),
            });
            row
        })
        .collect()
}

const COORD_HEADER: [&str; 5] = ["x", "y", "s", "t", "value"];

pub fn run(quantity: Quantity, cfg: &RunConfig) -> Result<Report> {
    match quantity {
        Quantity::Signature => signature_sweep(cfg),
        _ => coordinate_sweep(quantity, cfg),
    }
}

fn coordinate_sweep(quantity: Quantity, cfg: &RunConfig) -> Result<Report> {
    let pts = coordinate_grid(cfg);
    let tol = &cfg.tolerances;
    let mut report;
    let values = match quantity {
        Quantity::K => {
            let chart = sweep_chart(cfg)?;
            let values = evaluate(&pts, |p| chart.gauss_curvature(p.z));
            report = Report::new("sweep K", cfg);
            if let Some(k) = chart.model_curvature() {
                report.push(aggregate("model-curvature", tol.model_curvature, &pts, &values, |v| {
                    (v - k).abs()
                }));
                report.detail("model_curvature", k)?;
            }
            report.detail("chart", chart.name())?;
            values
        }
        Quantity::RhoNorm => {
            let setup = Setup::from_config(cfg)?;
            let (chart, w) = (&setup.chart, setup.weights());
            let values = evaluate(&pts, |p| Ok(max_abs(&ricci_report(chart, w, p, 0.0)?.rho)));
            report = Report::new("sweep rho-norm", cfg);
            report.push(aggregate("ricci-form", tol.ricci_form, &pts, &values, |v| *v));
            report.detail("source", setup.describe())?;
            values
        }
        Quantity::Scalar => {
            let setup = Setup::from_config(cfg)?;
            let (chart, w) = (&setup.chart, setup.weights());
            let values = evaluate(&pts, |p| Ok(curvature(chart, w, p)?.scalar));
            report = Report::new("sweep scalar", cfg);
            report.detail("source", setup.describe())?;
            values
        }
        Quantity::Signature => unreachable!("handled by signature_sweep"),
    };
    let missing = values.iter().filter(|v| v.is_err()).count();
    report.detail("cells", pts.len())?;
    report.detail("missing", missing)?;
    if let Some(path) = &cfg.output.csv {
        write_csv(path, &COORD_HEADER, &coordinate_rows(&pts, &values))?;
    }
    Ok(report)
}

/// Classifies constant weights `(f, b + ic, h)` by the sign criteria and by
/// the eigenvalues of the assembled metric.
fn signature_sweep(cfg: &RunConfig) -> Result<Report> {
    let g = &cfg.grid;
    let fs = axis(g.f, -2.0, 2.0, 41);
    let bs = axis(g.b, 1.0, 1.0, 1);
    let cs = axis(g.c, 0.0, 0.0, 1);
    let hs = axis(g.h, -2.0, 2.0, 41);
    let chart = match &cfg.chart {
        Some(spec) => chart_from(spec)?,
        None => ConformalChart::flat(),
    };
    // one base point; the criteria do not depend on it
    let at = coordinate_grid(cfg)[0];
    let mut cells = Vec::new();
    for &f in &fs {
        for &b in &bs {
            for &c in &cs {
                for &h in &hs {
                    cells.push([f, b, c, h]);
                }
            }
        }
    }
    let results: Vec<ciconia::Result<_>> = cells
        .par_iter()
        .map(|&[f, b, c, h]| signature(&chart, &WeightTriple::constants(f, C64::new(b, c), h), at))
        .collect();

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut disagreements = 0;
    let mut missing = 0;
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, r) in cells.iter().zip(&results) {
        let mut row: Vec<String> = cell.iter().copied().map(csv_number).collect();
        match r {
            Ok(s) => {
                *counts.entry(s.criteria.to_string()).or_default() += 1;
                if !s.agree() {
                    disagreements += 1;
                }
                row.push(s.criteria.to_string());
            }
            Err(_) => {
                missing += 1;
                row.push("NA".into());
            }
        }
        rows.push(row);
    }
    let classes = counts
        .keys()
        .filter(|k| k.as_str() != Signature::Degenerate.to_string())
        .count();

    let mut report = Report::new("sweep signature", cfg);
    report.push_flag("signature-agreement", disagreements == 0 && missing == 0);
    report.detail("chart", chart.name())?;
    report.detail("point", at.coords())?;
    report.detail("cells", cells.len())?;
    report.detail("class_counts", &counts)?;
    report.detail("nondegenerate_classes", classes)?;
    report.detail("disagreements", disagreements)?;
    if let Some(path) = &cfg.output.csv {
        write_csv(path, &["f", "b", "c", "h", "value"], &rows)?;
    }
    Ok(report)
}
