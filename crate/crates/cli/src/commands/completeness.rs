use anyhow::{Context, Result};
use ciconia::einstein::FamilyKind;
use ciconia::geometry4d::{completeness_with, length_profile, Verdict};
use ciconia::C64;

use crate::args::parse_list;
use crate::config::RunConfig;
use crate::report::{csv_number, write_csv, Report};
use crate::setup::Setup;

/// What the closed-form asymptotics say about each family.
fn expected_verdict(kind: FamilyKind) -> Option<Verdict> {
    match kind {
        FamilyKind::CyI => Some(Verdict::Complete),
        FamilyKind::CyII | FamilyKind::CyIII => Some(Verdict::CompleteAwayFromZeroSection),
        FamilyKind::CyIV => Some(Verdict::CompleteWithBoundaryAdded),
        FamilyKind::RicciFlatGeneral => None,
    }
}

pub fn run(cfg: &RunConfig, z: Option<&str>, nodes: usize) -> Result<Report> {
    let setup = Setup::from_config(cfg)?;
    let z = match z {
        Some(src) => {
            let [re, im] = parse_list::<2>(src, "--z")?;
            C64::new(re, im)
        }
        None => C64::new(0.0, 0.0),
    };
    setup.chart.check_contains(z)?;
    let (chart, w) = (&setup.chart, setup.weights());
    let domain = setup.r2_domain();
    let tol = cfg.tolerances.exponent_fit;
    // fit quality is reported as a check rather than aborting the run
    let rep = completeness_with(chart, w, z, domain, f64::INFINITY)
        .with_context(|| format!("completeness of {}", setup.describe()))?;

    let mut report = Report::new("completeness", cfg);
    report.push_value("fit-inner", rep.inner.fit_residual, tol);
    report.push_value("fit-outer", rep.outer.fit_residual, tol);
    if let Some(expected) = setup.family().and_then(|f| expected_verdict(f.kind)) {
        report.push_flag("verdict", rep.verdict == expected);
        report.detail("expected_verdict", expected)?;
    }
    report.detail("source", setup.describe())?;
    report.detail("z", [z.re, z.im])?;
    report.detail("domain", domain)?;
    report.detail("inner", rep.inner)?;
    report.detail("outer", rep.outer)?;
    report.detail("verdict", rep.verdict)?;

    if let Some(path) = &cfg.output.csv {
        let rows: Vec<Vec<String>> = length_profile(chart, w, z, domain, nodes)?
            .into_iter()
            .map(|s| vec![csv_number(s.r), csv_number(s.sqrt_h), csv_number(s.cumulative)])
            .collect();
        write_csv(path, &["r", "sqrt_h", "cumulative"], &rows)?;
    }
    Ok(report)
}
