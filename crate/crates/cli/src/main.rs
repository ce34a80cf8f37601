mod args;
mod commands;
mod config;
mod report;
mod setup;

use std::process::ExitCode;

use anyhow::Result;
use ciconia::commutant::Group;
use clap::Parser;

use args::{base_config, Cli, Command, GroupArg};
use commands::geodesic::GeodesicArgs;
use report::Report;

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn dispatch(cli: &Cli) -> Result<Report> {
    let mut cfg = base_config(cli)?;
    match &cli.command {
        Command::Verify { subject, source, s } => {
            source.merge_into(&mut cfg)?;
            commands::verify::run(*subject, &cfg, *s)
        }
        Command::Completeness { source, z, nodes, csv } => {
            source.merge_into(&mut cfg)?;
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            commands::completeness::run(&cfg, z.as_deref(), *nodes)
        }
        Command::Sweep { quantity, source, grid, csv } => {
            source.merge_into(&mut cfg)?;
            grid.merge_into(&mut cfg)?;
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            commands::sweep::run(*quantity, &cfg)
        }
        Command::Commutant { m, group, trials, fresh } => {
            let group = match group {
                GroupArg::So => Group::SO,
                GroupArg::O => Group::O,
            };
            commands::commutant::run(&cfg, *m, group, *trials, *fresh)
        }
        Command::Geodesic { source, init, velocity, t_end, rtol, atol, csv } => {
            source.merge_into(&mut cfg)?;
            // a bare chart means its Sasaki metric
            if cfg.weights.is_none() && cfg.case.is_none() && cfg.family.is_none() {
                cfg.weights = Some(config::WeightsSpec::default());
            }
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            let g = GeodesicArgs {
                init,
                velocity,
                t_end: *t_end,
                rtol: *rtol,
                atol: *atol,
            };
            commands::geodesic::run(&cfg, &g)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = dispatch(&cli).and_then(|r| {
        r.write(r.config.output.path.as_deref())?;
        Ok(r.pass)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
