use anyhow::{Context, Result};
use ciconia::commutant::{
    solve_commutant, stability, structure_check, CommutantProblem, Group, DEFAULT_GENERATORS,
};

use crate::config::RunConfig;
use crate::report::Report;

pub fn run(cfg: &RunConfig, m: usize, group: Group, trials: usize, fresh: usize) -> Result<Report> {
    let tol = &cfg.tolerances;
    let seed = cfg.seed();
    let problem = CommutantProblem::random(m, group, DEFAULT_GENERATORS, seed)
        .with_context(|| format!("commutant of {group}({m})"))?;
    let basis = solve_commutant(&problem)?;
    let structure = structure_check(&basis);
    let stab = stability(m, group, trials, fresh, seed)?;

    let mut report = Report::new("commutant", cfg);
    report.push_value("commutation-fresh", stab.fresh_residual, tol.commutation);
    let worst = structure
        .diagonal_blocks
        .max(structure.off_diagonal)
        .max(structure.identity);
    report.push_value("structure", worst, tol.structure);
    report.push_flag("dimension-stable", stab.stable);
    report.detail("m", m)?;
    report.detail("group", group)?;
    report.detail("trials", trials)?;
    report.detail("fresh", fresh)?;
    report.detail("dimension", basis.dimension)?;
    report.detail("dimensions", &stab.dimensions)?;
    report.detail("structure", &structure)?;
    Ok(report)
}
