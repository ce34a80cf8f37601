use anyhow::{Context, Result};
use ciconia::geometry4d::{geodesic, ExitReason, StepControl};
use ciconia::{Point4, C64};

use crate::args::parse_list;
use crate::config::RunConfig;
use crate::report::{csv_number, write_csv, Report};
use crate::setup::Setup;

pub struct GeodesicArgs<'a> {
    pub init: &'a str,
    pub velocity: &'a str,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
}

pub fn run(cfg: &RunConfig, args: &GeodesicArgs) -> Result<Report> {
    let setup = Setup::from_config(cfg)?;
    let [x, y, s, t] = parse_list::<4>(args.init, "--init")?;
    let velocity = parse_list::<4>(args.velocity, "--velocity")?;
    if !(args.t_end.is_finite() && args.t_end > 0.0) {
        anyhow::bail!("--t-end must be positive, got {}", args.t_end);
    }
    let init = Point4 {
        z: C64::new(x, y),
        w: C64::new(s, t),
    };
    setup.chart.check_contains(init.z)?;
    let control = StepControl {
        rtol: args.rtol,
        atol: args.atol,
        ..StepControl::default()
    };
    let traj = geodesic(&setup.chart, setup.weights(), setup.r2_domain(), init, velocity, args.t_end, control)
        .with_context(|| format!("geodesic of {}", setup.describe()))?;

    let mut report = Report::new("geodesic", cfg);
    report.push_value("energy-drift", traj.drift_rate(), cfg.tolerances.energy_drift);
    let last = traj.last();
    report.detail("source", setup.describe())?;
    report.detail("exit", traj.exit)?;
    report.detail("reached_t_end", traj.exit == ExitReason::Completed)?;
    report.detail("t_final", last.t)?;
    report.detail("final_position", last.position)?;
    report.detail("final_velocity", last.velocity)?;
    report.detail("energy_drift", traj.energy_drift)?;
    report.detail("steps", traj.states.len() - 1)?;

    if let Some(path) = &cfg.output.csv {
        let rows: Vec<Vec<String>> = traj
            .states
            .iter()
            .map(|st| {
                std::iter::once(st.t)
                    .chain(st.position)
                    .chain(st.velocity)
                    .chain([st.energy])
                    .map(csv_number)
                    .collect()
            })
            .collect();
        write_csv(path, &["param", "x", "y", "s", "t", "dx", "dy", "ds", "dt", "energy"], &rows)?;
    }
    Ok(report)
}
