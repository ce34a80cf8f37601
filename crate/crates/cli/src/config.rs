//! Run configuration: JSON file, command-line flags and `CICONIA_SEED`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ciconia::einstein::FamilyKind;
use ciconia::kahler::CaseId;
use ciconia::{Domain, Expression, C64};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "CICONIA_SEED";
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartSpec {
    Model(String),
    Custom(CustomChart),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomChart {
    #[serde(default = "custom_name")]
    pub name: String,
    pub lambda: String,
    #[serde(default = "plane")]
    pub domain: Domain,
}

fn custom_name() -> String {
    "custom".into()
}

fn plane() -> Domain {
    Domain::Plane
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub f: Option<String>,
    pub a: Option<String>,
    pub h: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub id: CaseId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

/// A complex number given as a real, a `[re, im]` pair or text like `1-2i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl ComplexSpec {
    pub fn value(&self) -> Result<C64> {
        match self {
            ComplexSpec::Real(x) => Ok(C64::new(*x, 0.0)),
            ComplexSpec::Pair([re, im]) => Ok(C64::new(*re, *im)),
            ComplexSpec::Text(s) => Expression::parse(s)
                .ok()
                .and_then(|e| e.constant_value())
                .ok_or_else(|| anyhow!("`{s}` is not a complex constant")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<ComplexSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
}

/// Every numeric threshold used by the suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Tolerances {
    pub closedness: f64,
    pub curvature_std: f64,
    pub route_agreement: f64,
    pub ricci_form: f64,
    pub ricci_4d: f64,
    pub psi: f64,
    pub reality: f64,
    pub einstein: f64,
    pub scalar: f64,
    pub transition: f64,
    pub nabla: f64,
    pub dr2: f64,
    pub eta02: f64,
    pub energy_drift: f64,
    pub exponent_fit: f64,
    pub commutation: f64,
    pub structure: f64,
    pub model_curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closedness: 1e-9,
            curvature_std: 1e-8,
            route_agreement: 1e-9,
            ricci_form: 1e-8,
            ricci_4d: 1e-6,
            psi: 1e-10,
            reality: 1e-10,
            einstein: 1e-9,
            scalar: 1e-6,
            transition: 1e-9,
            nabla: 1e-9,
            dr2: 1e-9,
            eta02: 1e-12,
            energy_drift: 1e-8,
            exponent_fit: 0.05,
            commutation: 1e-10,
            structure: 1e-10,
            model_curvature: 1e-8,
        }
    }
}

impl Tolerances {
    /// Sets one tolerance by its kebab-case name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let mut map = match serde_json::to_value(&*self)? {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("tolerances serialize to an object"),
        };
        if !map.contains_key(name) {
            let known: Vec<_> = map.keys().cloned().collect();
            bail!("unknown tolerance `{name}` (known: {})", known.join(", "));
        }
        if value.is_nan() || value <= 0.0 {
            bail!("tolerance `{name}` must be positive, got {value}");
        }
        map.insert(name.to_string(), value.into());
        *self = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(())
    }
}

/// `lo:hi:n` or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn fixed(x: f64) -> Self {
        Axis { lo: x, hi: x, n: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n <= 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }

    pub fn parse(src: &str) -> Result<Self> {
        let parts: Vec<&str> = src.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim().parse().with_context(|| format!("`{s}` is not a number in axis `{src}`"))
        };
        match parts.as_slice() {
            [x] => Ok(Axis::fixed(num(x)?)),
            [lo, hi, n] => {
                let n: usize = n.trim().parse().with_context(|| format!("bad count in axis `{src}`"))?;
                if n == 0 {
                    bail!("axis `{src}` has no points");
                }
                Ok(Axis { lo: num(lo)?, hi: num(hi)?, n })
            }
            _ => bail!("axis `{src}` must be `value` or `lo:hi:n`"),
        }
    }
}

/// Sweep grid; coordinate sweeps use `x, y, s, t`, the signature sweep
/// uses `f, b, c, h` with `a = b + ic`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Axis>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report destination; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Destination of plot data (CSV) for the commands that produce it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sample `r²` uniformly in `[lo, hi]` instead of the source's default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_range: Option<[f64; 2]>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "is_default_grid")]
    pub grid: GridSpec,
}

fn is_default_grid(g: &GridSpec) -> bool {
    *g == GridSpec::default()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow!(
                "line {}, column {}, field `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                strip_position(&inner.to_string())
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Fills the seed from the environment when no flag set it.
    pub fn apply_env_seed(&mut self, flag_given: bool) -> Result<()> {
        if flag_given {
            return Ok(());
        }
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer"))?;
            self.seed = Some(seed);
        }
        Ok(())
    }

    /// Checks that exactly one weight source is configured.
    pub fn validate_source(&self) -> Result<()> {
        let given: Vec<&str> = [
            ("weights", self.weights.is_some()),
            ("case", self.case.is_some()),
            ("family", self.family.is_some()),
        ]
        .into_iter()
        .filter(|(_, on)| *on)
        .map(|(n, _)| n)
        .collect();
        match given.len() {
            1 => Ok(()),
            0 => bail!("field `weights`, `case` or `family`: one weight source is required"),
            _ => bail!("fields `{}`: only one weight source may be given", given.join("`, `")),
        }
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> &str {
    match msg.rfind(" at line ") {
        Some(i) => &msg[..i],
        None => msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_names_line_and_field() {
        let text = "{\n  \"chart\": \"sphere\",\n  \"sampels\": 10\n}";
        let err = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("sampels"), "{err}");
    }

    #[test]
    fn type_error_names_nested_field() {
        let text = "{\n  \"tolerances\": {\n    \"closedness\": \"small\"\n  }\n}";
        let err = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("tolerances.closedness"), "{err}");
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "chart": {"lambda": "4/(1+abs2(z))^2", "domain": {"kind": "disk", "radius": 2}},
            "family": {"kind": "cy-iii", "a": [0.6, 0.8], "c0": 0},
            "samples": 50,
            "seed": 7,
            "tolerances": {"ricci-form": 1e-7},
            "output": {"path": "out.json", "format": "json"},
            "grid": {"x": {"lo": -1, "hi": 1, "n": 3}}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.samples(), 50);
        assert_eq!(c.tolerances.ricci_form, 1e-7);
        assert_eq!(c.tolerances.closedness, 1e-9);
        let a = c.family.as_ref().unwrap().a.as_ref().unwrap().value().unwrap();
        assert_eq!(a, C64::new(0.6, 0.8));
        assert!(c.validate_source().is_ok());
    }

    #[test]
    fn two_sources_rejected() {
        let c = RunConfig {
            weights: Some(WeightsSpec::default()),
            family: Some(FamilySpec {
                kind: FamilyKind::CyI,
                a: None,
                c0: None,
                f: None,
            }),
            ..Default::default()
        };
        assert!(c.validate_source().is_err());
        assert!(RunConfig::default().validate_source().is_err());
    }

    #[test]
    fn tolerance_override_by_name() {
        let mut t = Tolerances::default();
        t.set("ricci-4d", 1e-5).unwrap();
        assert_eq!(t.ricci_4d, 1e-5);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("psi", -1.0).is_err());
    }

    #[test]
    fn axes() {
        assert_eq!(Axis::parse("-2:2:5").unwrap().values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(Axis::parse("0.5").unwrap().values(), vec![0.5]);
        assert!(Axis::parse("1:2").is_err());
    }

    #[test]
    fn complex_text() {
        assert_eq!(ComplexSpec::Text("1-2i".into()).value().unwrap(), C64::new(1.0, -2.0));
        assert!(ComplexSpec::Text("z".into()).value().is_err());
    }
}
