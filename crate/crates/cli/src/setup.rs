//! Turns a validated [`RunConfig`] into a chart, weights and sample points.

use anyhow::{Context, Result};
use ciconia::einstein::{make_family, FamilyParams, SolutionFamily};
use ciconia::kahler::{instantiate_case, CaseParams, KahlerInstance};
use ciconia::metric::WeightTriple;
use ciconia::sampling::{sample_points, FibreRange};
use ciconia::{ConformalChart, Expression, Point4};

use crate::config::{ChartSpec, RunConfig};

pub enum Source {
    Weights(WeightTriple),
    Case(KahlerInstance),
    Family(SolutionFamily),
}

pub struct Setup {
    pub chart: ConformalChart,
    pub source: Source,
}

pub fn chart_from(spec: &ChartSpec) -> Result<ConformalChart> {
    match spec {
        ChartSpec::Model(name) => Ok(ConformalChart::model(name)?),
        ChartSpec::Custom(c) => {
            let lambda = Expression::parse(&c.lambda).context("field `chart.lambda`")?;
            Ok(ConformalChart::new(c.name.clone(), lambda, c.domain)?)
        }
    }
}

impl Setup {
    pub fn from_config(cfg: &RunConfig) -> Result<Setup> {
        cfg.validate_source()?;
        let given = cfg.chart.as_ref().map(chart_from).transpose()?;
        if let Some(w) = &cfg.weights {
            let chart = given.unwrap_or_else(ConformalChart::flat);
            let pick = |v: &Option<String>, d: &str| v.clone().unwrap_or_else(|| d.to_string());
            let weights = WeightTriple::parse(&pick(&w.f, "1"), &pick(&w.a, "0"), &pick(&w.h, "1"))
                .context("field `weights`")?;
            return Ok(Setup {
                chart,
                source: Source::Weights(weights),
            });
        }
        if let Some(c) = &cfg.case {
            let chart = given.unwrap_or_else(|| c.id.default_chart());
            let params = CaseParams {
                f: c.f.clone(),
                a: c.a.clone(),
                h: c.h.clone(),
                f0: c.f0,
                f1: c.f1,
            };
            let inst = instantiate_case(c.id, &params, &chart)
                .with_context(|| format!("case {}", c.id))?;
            return Ok(Setup {
                chart,
                source: Source::Case(inst),
            });
        }
        let f = cfg.family.as_ref().expect("validated: one source present");
        let chart = given.unwrap_or_else(|| f.kind.default_chart());
        let params = FamilyParams {
            a: f.a.as_ref().map(|a| a.value()).transpose().context("field `family.a`")?,
            c0: f.c0,
            f: f.f,
        };
        let fam = make_family(f.kind, &params, &chart).with_context(|| format!("family {}", f.kind))?;
        Ok(Setup {
            chart,
            source: Source::Family(fam),
        })
    }

    pub fn weights(&self) -> &WeightTriple {
        match &self.source {
            Source::Weights(w) => w,
            Source::Case(c) => &c.weights,
            Source::Family(f) => &f.weights,
        }
    }

    /// Open interval of admissible `r²`.
    pub fn r2_domain(&self) -> (f64, f64) {
        match &self.source {
            Source::Weights(_) => (0.0, f64::INFINITY),
            Source::Case(c) => c.r2_domain,
            Source::Family(f) => f.domain,
        }
    }

    pub fn family(&self) -> Option<&SolutionFamily> {
        match &self.source {
            Source::Family(f) => Some(f),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.source {
            Source::Weights(_) => "weights".into(),
            Source::Case(c) => format!("case {}", c.case),
            Source::Family(f) => f.kind.to_string(),
        }
    }

    pub fn samples(&self, cfg: &RunConfig) -> Vec<Point4> {
        let (n, seed) = (cfg.samples(), cfg.seed());
        if let Some([lo, hi]) = cfg.r2_range {
            return sample_points(&self.chart, FibreRange::R2 { lo, hi }, n, seed, 1e-3);
        }
        match &self.source {
            Source::Weights(_) => {
                sample_points(&self.chart, FibreRange::Square { half_width: 1.0 }, n, seed, 1e-3)
            }
            Source::Case(c) => c.sample(&self.chart, n, seed),
            Source::Family(f) => f.sample(&self.chart, n, seed),
        }
    }
}
