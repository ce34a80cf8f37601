//! Command-line surface and its merge into [`RunConfig`].

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ciconia::einstein::FamilyKind;
use ciconia::kahler::CaseId;
use ciconia::Domain;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{
    Axis, CaseSpec, ChartSpec, ComplexSpec, CustomChart, FamilySpec, RunConfig, WeightsSpec,
};

#[derive(Debug, Parser)]
#[command(name = "ciconia", version, about = "Verification engine for ciconia metrics on tangent bundles of surfaces")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sample generation (overrides CICONIA_SEED and the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of sample points.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Tolerance override, e.g. `--tol ricci-form=1e-7`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    pub tolerances: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subject {
    Kahler,
    RicciFlat,
    Einstein,
    Transitions,
    NablaTables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "K")]
    K,
    RhoNorm,
    Signature,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    So,
    O,
}

#[derive(Debug, Default, Args)]
pub struct SourceArgs {
    /// Built-in chart: flat, flat-torus, sphere, hyperbolic.
    #[arg(long)]
    pub chart: Option<String>,
    /// Custom conformal factor in z, zbar.
    #[arg(allow_hyphen_values = true, long, conflicts_with = "chart")]
    pub lambda: Option<String>,
    /// Domain of a custom chart: plane, half-plane, disk[:R], annulus:r:R, rectangle:w:h.
    #[arg(long, requires = "lambda")]
    pub domain: Option<String>,
    /// Kähler case i..x or flat-example.
    #[arg(long, conflicts_with = "family")]
    pub case: Option<String>,
    /// Solution family: ricci-flat-general, cy-i, cy-ii, cy-iii, cy-iv.
    #[arg(long)]
    pub family: Option<String>,
    /// Weight f (expression; a number for a family).
    #[arg(allow_hyphen_values = true, long)]
    pub f: Option<String>,
    /// Weight a (expression; a complex constant for a family).
    #[arg(allow_hyphen_values = true, long)]
    pub a: Option<String>,
    /// Weight h (expression).
    #[arg(allow_hyphen_values = true, long)]
    pub h: Option<String>,
    /// f(0) for the cases with f affine or integrated in r².
    #[arg(allow_hyphen_values = true, long)]
    pub f0: Option<f64>,
    /// Slope of f in r² for the affine cases.
    #[arg(allow_hyphen_values = true, long)]
    pub f1: Option<f64>,
    /// Family constant c₀.
    #[arg(allow_hyphen_values = true, long)]
    pub c0: Option<f64>,
    /// Sample r² uniformly in LO:HI.
    #[arg(allow_hyphen_values = true, long, value_name = "LO:HI")]
    pub r2_range: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct GridArgs {
    #[arg(allow_hyphen_values = true, long, value_name = "LO:HI:N")]
    pub x: Option<String>,
    #[arg(allow_hyphen_values = true, long, value_name = "LO:HI:N")]
    pub y: Option<String>,
    #[arg(allow_hyphen_values = true, long, value_name = "LO:HI:N")]
    pub s: Option<String>,
    #[arg(allow_hyphen_values = true, long, value_name = "LO:HI:N")]
    pub t: Option<String>,
    /// Signature sweep: f axis.
    #[arg(allow_hyphen_values = true, id = "grid_f", long = "gf", value_name = "LO:HI:N")]
    pub f: Option<String>,
    /// Signature sweep: Re a axis.
    #[arg(allow_hyphen_values = true, id = "grid_b", long = "gb", value_name = "LO:HI:N")]
    pub b: Option<String>,
    /// Signature sweep: Im a axis.
    #[arg(allow_hyphen_values = true, id = "grid_c", long = "gc", value_name = "LO:HI:N")]
    pub c: Option<String>,
    /// Signature sweep: h axis.
    #[arg(allow_hyphen_values = true, id = "grid_h", long = "gh", value_name = "LO:HI:N")]
    pub h: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a residual suite.
    Verify {
        #[arg(value_enum)]
        subject: Subject,
        #[command(flatten)]
        source: SourceArgs,
        /// Einstein constant S to test (fitted at each sample when absent).
        #[arg(allow_hyphen_values = true, long = "S", alias = "einstein-constant")]
        s: Option<f64>,
    },
    /// Distance to the ends of the fibre for a family.
    Completeness {
        #[command(flatten)]
        source: SourceArgs,
        /// Base point as RE,IM.
        #[arg(allow_hyphen_values = true, long, value_name = "RE,IM")]
        z: Option<String>,
        /// Nodes of the length profile.
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        /// Write the length profile (r, sqrt_h, cumulative) here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate a quantity over a grid.
    Sweep {
        #[arg(value_enum)]
        quantity: Quantity,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the grid here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Symmetric commutant of the diagonal orthogonal representation.
    Commutant {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "so")]
        group: GroupArg,
        /// Independent generator draws for the stability test.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Fresh group elements used to test each basis.
        #[arg(long, default_value_t = 100)]
        fresh: usize,
    },
    /// Integrate a geodesic.
    Geodesic {
        #[command(flatten)]
        source: SourceArgs,
        /// Initial point X,Y,S,T.
        #[arg(allow_hyphen_values = true, long, value_name = "X,Y,S,T")]
        init: String,
        /// Initial velocity.
        #[arg(allow_hyphen_values = true, long, value_name = "VX,VY,VS,VT")]
        velocity: String,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-12)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// Write the trajectory here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

pub fn parse_list<const N: usize>(src: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = src
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("{what} `{src}` must be {N} comma-separated numbers"))?;
    v.try_into()
        .map_err(|_| anyhow::anyhow!("{what} `{src}` must have {N} components"))
}

fn parse_domain(src: &str) -> Result<Domain> {
    let parts: Vec<&str> = src.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.parse().with_context(|| format!("bad number `{s}` in domain `{src}`"))
    };
    Ok(match parts.as_slice() {
        ["plane"] => Domain::Plane,
        ["half-plane"] => Domain::HalfPlane,
        ["disk"] => Domain::Disk { radius: 1.0 },
        ["disk", r] => Domain::Disk { radius: num(r)? },
        ["annulus", a, b] => Domain::Annulus {
            inner: num(a)?,
            outer: num(b)?,
        },
        ["rectangle", w, h] => Domain::Rectangle {
            width: num(w)?,
            height: num(h)?,
        },
        _ => bail!("unknown domain `{src}`"),
    })
}

fn parse_real(src: &str, flag: &str) -> Result<f64> {
    src.trim()
        .parse()
        .with_context(|| format!("--{flag} `{src}` must be a number for a family"))
}

impl SourceArgs {
    pub fn merge_into(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(name) = &self.chart {
            cfg.chart = Some(ChartSpec::Model(name.clone()));
        }
        if let Some(lambda) = &self.lambda {
            let domain = self.domain.as_deref().map(parse_domain).transpose()?;
            cfg.chart = Some(ChartSpec::Custom(CustomChart {
                name: "custom".into(),
                lambda: lambda.clone(),
                domain: domain.unwrap_or(Domain::Plane),
            }));
        }
        if let Some(r) = &self.r2_range {
            let [lo, hi] = parse_list::<2>(&r.replace(':', ","), "--r2-range")?;
            if !(0.0 <= lo && lo < hi) {
                bail!("--r2-range needs 0 <= LO < HI");
            }
            cfg.r2_range = Some([lo, hi]);
        }

        if let Some(kind) = &self.family {
            let kind: FamilyKind = kind.parse()?;
            if cfg.family.as_ref().map(|f| f.kind) != Some(kind) {
                cfg.family = Some(FamilySpec {
                    kind,
                    a: None,
                    c0: None,
                    f: None,
                });
            }
            cfg.weights = None;
            cfg.case = None;
        } else if let Some(id) = &self.case {
            let id: CaseId = id.parse()?;
            if cfg.case.as_ref().map(|c| c.id) != Some(id) {
                cfg.case = Some(CaseSpec {
                    id,
                    f: None,
                    a: None,
                    h: None,
                    f0: None,
                    f1: None,
                });
            }
            cfg.weights = None;
            cfg.family = None;
        } else if (self.f.is_some() || self.a.is_some() || self.h.is_some())
            && cfg.family.is_none()
            && cfg.case.is_none()
            && cfg.weights.is_none()
        {
            cfg.weights = Some(WeightsSpec::default());
        }

        if let Some(fam) = cfg.family.as_mut() {
            if let Some(a) = &self.a {
                fam.a = Some(ComplexSpec::Text(a.clone()));
            }
            if let Some(f) = &self.f {
                fam.f = Some(parse_real(f, "f")?);
            }
            if let Some(c0) = self.c0 {
                fam.c0 = Some(c0);
            }
            if self.h.is_some() || self.f0.is_some() || self.f1.is_some() {
                bail!("--h, --f0 and --f1 do not apply to a family");
            }
        } else if let Some(case) = cfg.case.as_mut() {
            set(&mut case.f, &self.f);
            set(&mut case.a, &self.a);
            set(&mut case.h, &self.h);
            case.f0 = self.f0.or(case.f0);
            case.f1 = self.f1.or(case.f1);
            if self.c0.is_some() {
                bail!("--c0 applies to families only");
            }
        } else if let Some(w) = cfg.weights.as_mut() {
            set(&mut w.f, &self.f);
            set(&mut w.a, &self.a);
            set(&mut w.h, &self.h);
            if self.c0.is_some() || self.f0.is_some() || self.f1.is_some() {
                bail!("--c0, --f0 and --f1 need --case or --family");
            }
        } else if self.c0.is_some() || self.f0.is_some() || self.f1.is_some() {
            bail!("--c0, --f0 and --f1 need --case or --family");
        }
        Ok(())
    }
}

fn set(slot: &mut Option<String>, flag: &Option<String>) {
    if let Some(v) = flag {
        *slot = Some(v.clone());
    }
}

impl GridArgs {
    pub fn merge_into(&self, cfg: &mut RunConfig) -> Result<()> {
        let g = &mut cfg.grid;
        for (flag, slot) in [
            (&self.x, &mut g.x),
            (&self.y, &mut g.y),
            (&self.s, &mut g.s),
            (&self.t, &mut g.t),
            (&self.f, &mut g.f),
            (&self.b, &mut g.b),
            (&self.c, &mut g.c),
            (&self.h, &mut g.h),
        ] {
            if let Some(src) = flag {
                *slot = Some(Axis::parse(src)?);
            }
        }
        Ok(())
    }
}

/// Applies the global flags, config file and environment to a config.
pub fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    cfg.apply_env_seed(cli.seed.is_some())?;
    if let Some(n) = cli.samples {
        cfg.samples = Some(n);
    }
    if cli.output.is_some() {
        cfg.output.path = cli.output.clone();
    }
    for t in &cli.tolerances {
        let (name, value) = t
            .split_once('=')
            .with_context(|| format!("--tol `{t}` must look like NAME=VALUE"))?;
        let value: f64 = value
            .parse()
            .with_context(|| format!("--tol `{t}`: `{value}` is not a number"))?;
        cfg.tolerances.set(name, value)?;
    }
    if cfg.samples() == 0 {
        bail!("field `samples` must be positive");
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(args: &[&str]) -> SourceArgs {
        #[derive(Parser)]
        struct T {
            #[command(flatten)]
            s: SourceArgs,
        }
        let mut v = vec!["t"];
        v.extend_from_slice(args);
        T::parse_from(v).s
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn case_flags_build_case() {
        let mut cfg = RunConfig::default();
        source(&["--case", "iv", "--chart", "hyperbolic", "--h", "2", "--f1", "1", "--f0", "1"])
            .merge_into(&mut cfg)
            .unwrap();
        let c = cfg.case.unwrap();
        assert_eq!(c.id, CaseId::IV);
        assert_eq!((c.h.as_deref(), c.f0, c.f1), (Some("2"), Some(1.0), Some(1.0)));
        assert_eq!(cfg.chart, Some(ChartSpec::Model("hyperbolic".into())));
    }

    #[test]
    fn family_flags() {
        let mut cfg = RunConfig::default();
        source(&["--family", "cy-i", "--a", "1", "--f", "1"]).merge_into(&mut cfg).unwrap();
        let f = cfg.family.unwrap();
        assert_eq!(f.kind, FamilyKind::CyI);
        assert_eq!(f.f, Some(1.0));
        let mut cfg = RunConfig::default();
        assert!(source(&["--family", "cy-v"]).merge_into(&mut cfg).is_err());
        let mut cfg = RunConfig::default();
        assert!(source(&["--family", "cy-i", "--f", "z"]).merge_into(&mut cfg).is_err());
    }

    #[test]
    fn plain_weights() {
        let mut cfg = RunConfig::default();
        source(&["--chart", "sphere", "--f", "1", "--a", "0", "--h", "1"])
            .merge_into(&mut cfg)
            .unwrap();
        assert_eq!(cfg.weights.unwrap().h.as_deref(), Some("1"));
        let mut cfg = RunConfig::default();
        assert!(source(&["--c0", "1"]).merge_into(&mut cfg).is_err());
    }

    #[test]
    fn custom_chart_domain() {
        let mut cfg = RunConfig::default();
        source(&["--lambda", "1", "--domain", "disk:2"]).merge_into(&mut cfg).unwrap();
        match cfg.chart.unwrap() {
            ChartSpec::Custom(c) => assert_eq!(c.domain, Domain::Disk { radius: 2.0 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<2>("1, -2", "z").unwrap(), [1.0, -2.0]);
        assert!(parse_list::<4>("1,2", "v").is_err());
    }
}
