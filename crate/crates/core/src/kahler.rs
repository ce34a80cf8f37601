//! Closedness of `ω = (iλ/2)(f dz∧dz̄ + a dz∧η̄ + ā η∧dz̄ + h η∧η̄)` and the
//! catalogue of weight triples for which it holds.
//!
//! `dω = 0` is equivalent to the two residuals
//!
//! ```text
//! res1 = ∂h/∂z − ∂a/∂w − wΓ ∂h/∂w
//! res2 = ∂f/∂w + wΓ ∂ā/∂w − ∂ā/∂z − w̄ h ∂Γ/∂z̄
//! ```
//!
//! vanishing. Each solution case is a [`CaseSpec`]: a required form per
//! weight plus a curvature law, so every case is instantiated and checked
//! by the same code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{real_literal, Expression};
use crate::jets::{Point4, Wirtinger, C64};
use crate::metric::{local_jets, LocalJets, RadialIntegral, Weight, WeightTriple};
use crate::sampling::{sample_points, FibreRange};
use crate::surface::ConformalChart;

const HOLOMORPHY_TOL: f64 = 1e-10;
const CURVATURE_TOL: f64 = 1e-8;

pub fn closedness_from(l: &LocalJets) -> (C64, C64) {
    let wg = l.w.value * l.gamma.value;
    let res1 = l.h.wirtinger(Wirtinger::Z)
        - l.a.wirtinger(Wirtinger::W)
        - wg * l.h.wirtinger(Wirtinger::W);
    let res2 = l.f.wirtinger(Wirtinger::W) + wg * l.abar.wirtinger(Wirtinger::W)
        - l.abar.wirtinger(Wirtinger::Z)
        - l.wbar.value * l.h.value * l.gamma.wirtinger(Wirtinger::Zbar);
    (res1, res2)
}

pub fn closedness_residual(
    chart: &ConformalChart,
    weights: &WeightTriple,
    p: Point4,
) -> Result<(C64, C64)> {
    Ok(closedness_from(&local_jets(chart, weights, p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
    FlatExample,
}

impl CaseId {
    /// The ten numbered cases.
    pub const NUMBERED: [CaseId; 10] = [
        CaseId::I,
        CaseId::II,
        CaseId::III,
        CaseId::IV,
        CaseId::V,
        CaseId::VI,
        CaseId::VII,
        CaseId::VIII,
        CaseId::IX,
        CaseId::X,
    ];

    pub fn spec(self) -> &'static CaseSpec {
        CASES.iter().find(|c| c.id == self).expect("every case has a spec")
    }

    /// The built-in chart whose curvature suits the case's defaults.
    pub fn default_chart(self) -> ConformalChart {
        match self {
            CaseId::IV | CaseId::VI => ConformalChart::hyperbolic(),
            CaseId::VII | CaseId::VIII | CaseId::IX => ConformalChart::sphere(),
            _ => ConformalChart::flat(),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::I => "i",
            CaseId::II => "ii",
            CaseId::III => "iii",
            CaseId::IV => "iv",
            CaseId::V => "v",
            CaseId::VI => "vi",
            CaseId::VII => "vii",
            CaseId::VIII => "viii",
            CaseId::IX => "ix",
            CaseId::X => "x",
            CaseId::FlatExample => "flat-example",
        })
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = CaseId::NUMBERED.iter().copied().chain([CaseId::FlatExample]);
        for c in all {
            if c.to_string() == s.to_ascii_lowercase() {
                return Ok(c);
            }
        }
        Err(Error::Invalid(format!(
            "unknown case `{s}` (expected i..x or flat-example)"
        )))
    }
}

impl TryFrom<String> for CaseId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CaseId> for String {
    fn from(v: CaseId) -> String {
        v.to_string()
    }
}

/// What a weight must look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Constant,
    BaseOnly,
    Holomorphic,
    NonvanishingHolomorphic,
    Radial,
    /// `f₁ r² + f₀`.
    LinearInR2,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureLaw {
    /// `K = 0`.
    Flat,
    /// `K = −2 f₁ / h` with `f = f₁ r² + f₀`, `h` constant.
    Slope,
    /// `f′ = −K h / 2` along `r²`.
    Ode,
    Any,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseSpec {
    pub id: CaseId,
    pub f: Form,
    pub a: Form,
    pub h: Form,
    pub curvature: CurvatureLaw,
    /// Split signature (`Δ < 0`) instead of positive definite.
    pub pseudo: bool,
}

const fn spec(id: CaseId, f: Form, a: Form, h: Form, curvature: CurvatureLaw, pseudo: bool) -> CaseSpec {
    CaseSpec {
        id,
        f,
        a,
        h,
        curvature,
        pseudo,
    }
}

use CurvatureLaw as L;
use Form as F;

pub static CASES: [CaseSpec; 11] = [
    spec(CaseId::I, F::BaseOnly, F::Holomorphic, F::Constant, L::Flat, false),
    spec(CaseId::II, F::BaseOnly, F::Constant, F::Constant, L::Flat, false),
    spec(CaseId::III, F::BaseOnly, F::Holomorphic, F::Radial, L::Flat, false),
    spec(CaseId::IV, F::LinearInR2, F::Holomorphic, F::Constant, L::Slope, false),
    spec(CaseId::V, F::BaseOnly, F::Constant, F::Radial, L::Flat, false),
    spec(CaseId::VI, F::Radial, F::Holomorphic, F::Radial, L::Ode, false),
    spec(CaseId::VII, F::LinearInR2, F::Constant, F::Constant, L::Slope, false),
    spec(CaseId::VIII, F::Radial, F::Constant, F::Radial, L::Ode, false),
    spec(CaseId::IX, F::BaseOnly, F::NonvanishingHolomorphic, F::Zero, L::Any, true),
    spec(CaseId::X, F::Constant, F::Constant, F::Zero, L::Any, true),
    spec(CaseId::FlatExample, F::BaseOnly, F::Holomorphic, F::Constant, L::Flat, false),
];

/// User overrides for a case; anything left `None` takes the case default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseParams {
    pub f: Option<String>,
    pub a: Option<String>,
    pub h: Option<String>,
    pub f0: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KahlerInstance {
    pub case: CaseId,
    pub weights: WeightTriple,
    /// Open interval of admissible `r²`.
    pub r2_domain: (f64, f64),
    pub curvature: f64,
}

impl KahlerInstance {
    /// Seeded interior samples of the admissible region.
    pub fn sample(&self, chart: &ConformalChart, n: usize, seed: u64) -> Vec<Point4> {
        let (lo, hi) = self.r2_domain;
        sample_points(chart, FibreRange::interior(lo, hi, 1e-2), n, seed, 1e-3)
    }
}

fn base_samples(chart: &ConformalChart) -> Vec<C64> {
    sample_points(chart, FibreRange::Square { half_width: 1.0 }, 64, 0, 1e-3)
        .into_iter()
        .map(|p| p.z)
        .collect()
}

fn constant_real(w: &Weight, name: &str) -> Result<f64> {
    match w.constant_value() {
        Some(c) if c.im == 0.0 => Ok(c.re),
        _ => Err(Error::Invalid(format!(
            "weight {name} = `{}` must be a real constant here",
            w.describe()
        ))),
    }
}

fn expr(src: &str) -> Result<Expression> {
    Expression::parse(src)
}

/// `f₁` from `K = −2 f₁ / h`, or a mismatch if `f₁` was supplied.
fn slope(chart: &ConformalChart, k: f64, h: f64, f1: Option<f64>) -> Result<f64> {
    match f1 {
        None => Ok(-k * h / 2.0),
        Some(f1) => {
            let required = -2.0 * f1 / h;
            if (required - k).abs() > CURVATURE_TOL {
                Err(Error::CurvatureMismatch {
                    chart: chart.name().to_string(),
                    required,
                    found: k,
                })
            } else {
                Ok(f1)
            }
        }
    }
}

fn require_flat(chart: &ConformalChart, k: f64) -> Result<()> {
    if k.abs() > CURVATURE_TOL {
        return Err(Error::CurvatureMismatch {
            chart: chart.name().to_string(),
            required: 0.0,
            found: k,
        });
    }
    Ok(())
}

/// Builds the weights of a case on a chart and checks that they meet the
/// case constraints and the positivity (or split-signature) requirement.
pub fn instantiate_case(
    case: CaseId,
    params: &CaseParams,
    chart: &ConformalChart,
) -> Result<KahlerInstance> {
    let zs = base_samples(chart);
    let k = chart.constant_curvature(&zs)?;
    let pick = |given: &Option<String>, default: &str| -> String {
        given.clone().unwrap_or_else(|| default.to_string())
    };
    let weights = match case {
        CaseId::I | CaseId::FlatExample => {
            require_flat(chart, k)?;
            let a = pick(&params.a, "z^2");
            if case == CaseId::FlatExample {
                flat_example(&expr(&a)?)?
            } else {
                let f = params.f.clone().unwrap_or_else(|| format!("1 + abs2({a})"));
                WeightTriple::parse(&f, &a, &pick(&params.h, "1"))?
            }
        }
        CaseId::II => {
            require_flat(chart, k)?;
            // f is kept constant here; the closedness system alone would
            // also admit any base-only f.
            let w = WeightTriple::parse(
                &pick(&params.f, "2"),
                &pick(&params.a, "0.5"),
                &pick(&params.h, "1"),
            )?;
            constant_real(&w.f, "f")?;
            w
        }
        CaseId::III => {
            require_flat(chart, k)?;
            WeightTriple::parse(
                &pick(&params.f, "2 + abs2(z)"),
                &pick(&params.a, "z"),
                &pick(&params.h, "1 + r2"),
            )?
        }
        CaseId::IV | CaseId::VII => {
            let h = Weight::parse(&pick(&params.h, "2"))?;
            let hv = constant_real(&h, "h")?;
            let f1 = slope(chart, k, hv, params.f1)?;
            let f0 = params.f0.unwrap_or(1.0);
            let a_default = if case == CaseId::IV { "0" } else { "0.25" };
            WeightTriple {
                f: Weight::parse(&format!("{} * r2 + {}", real_literal(f1), real_literal(f0)))?,
                a: Weight::parse(&pick(&params.a, a_default))?,
                h,
            }
        }
        CaseId::V => {
            require_flat(chart, k)?;
            WeightTriple::parse(
                &pick(&params.f, "1 + abs2(z)"),
                &pick(&params.a, "0.5"),
                &pick(&params.h, "1 + r2"),
            )?
        }
        CaseId::VI | CaseId::VIII => {
            let (a_default, f0_default) = if case == CaseId::VI {
                ("0.5*z", 1.0)
            } else {
                ("0.5", 2.0)
            };
            let h = expr(&pick(&params.h, "1 + r2"))?;
            let f = match &params.f {
                Some(src) => Weight::parse(src)?,
                None => Weight::RadialIntegral(RadialIntegral::new(
                    params.f0.unwrap_or(f0_default),
                    -k / 2.0,
                    h.clone(),
                )?),
            };
            WeightTriple {
                f,
                a: Weight::parse(&pick(&params.a, a_default))?,
                h: Weight::Expr(h),
            }
        }
        CaseId::IX => WeightTriple::parse(
            &pick(&params.f, "1 + abs2(z)"),
            &pick(&params.a, "exp(z)"),
            &pick(&params.h, "0"),
        )?,
        CaseId::X => WeightTriple::parse(
            &pick(&params.f, "1"),
            &pick(&params.a, "0.5+0.5i"),
            &pick(&params.h, "0"),
        )?,
    };

    let spec = case.spec();
    let r2_domain = admissible_r2(&weights, spec.pseudo)?;
    let inst = KahlerInstance {
        case,
        weights,
        r2_domain,
        curvature: k,
    };
    let probe = inst.sample(chart, 64, 0);
    let violations = check_constraints(spec, &inst.weights, chart, &probe)?;
    if let Some(v) = violations.first() {
        return Err(v.clone());
    }
    check_signature(&inst.weights, chart, &probe, spec.pseudo)?;
    Ok(inst)
}

fn sign_ok(f: f64, delta: f64, pseudo: bool) -> bool {
    if pseudo {
        delta < 0.0
    } else {
        f > 0.0 && delta > 0.0
    }
}

/// For weights depending on `r²` alone, the interval `(0, r²_max)` on which
/// the required signature holds; otherwise `(0, ∞)`.
fn admissible_r2(w: &WeightTriple, pseudo: bool) -> Result<(f64, f64)> {
    if !w.classes().iter().all(|c| c.is_radial()) {
        return Ok((0.0, f64::INFINITY));
    }
    let ok_at = |r2: f64| -> Result<bool> {
        let f = w.f.radial_derivatives(r2)?[0].re;
        let a = w.a.radial_derivatives(r2)?[0];
        let h = w.h.radial_derivatives(r2)?[0].re;
        Ok(sign_ok(f, f * h - a.norm_sqr(), pseudo))
    };
    let grid: Vec<f64> = (0..=400).map(|i| 10f64.powf(-6.0 + 9.0 * i as f64 / 400.0)).collect();
    if !ok_at(grid[0])? {
        return Err(Error::PositivityViolation(
            "signature requirement fails near the zero section".into(),
        ));
    }
    for pair in grid.windows(2) {
        if !ok_at(pair[1])? {
            let (mut lo, mut hi) = (pair[0], pair[1]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if ok_at(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok((0.0, lo));
        }
    }
    Ok((0.0, f64::INFINITY))
}

fn check_signature(w: &WeightTriple, chart: &ConformalChart, pts: &[Point4], pseudo: bool) -> Result<()> {
    for p in pts {
        let (f, _, _, delta) = w.values(chart, *p)?;
        if !sign_ok(f, delta, pseudo) {
            let want = if pseudo { "Δ < 0" } else { "f > 0 and Δ > 0" };
            return Err(Error::PositivityViolation(format!(
                "{want} fails at z = {}, w = {} (f = {f}, Δ = {delta})",
                p.z, p.w
            )));
        }
    }
    Ok(())
}

fn r2_at(chart: &ConformalChart, p: &Point4) -> Result<f64> {
    Ok(chart.lambda_value(p.z)? * p.w.norm_sqr())
}

fn check_form(
    form: Form,
    name: &str,
    w: &Weight,
    chart: &ConformalChart,
    pts: &[Point4],
    out: &mut Vec<Error>,
) -> Result<()> {
    let class = w.class();
    let fail = |why: &str| Error::Invalid(format!("weight {name} = `{}` {why}", w.describe()));
    match form {
        Form::Constant => {
            if w.constant_value().is_none() {
                out.push(fail("must be constant"));
            }
        }
        Form::Zero => {
            if w.constant_value() != Some(C64::new(0.0, 0.0)) {
                out.push(fail("must vanish identically"));
            }
        }
        Form::BaseOnly => {
            if !class.is_base_only() {
                out.push(fail("must depend on z only"));
            }
        }
        Form::Holomorphic | Form::NonvanishingHolomorphic => {
            if !class.is_base_only() {
                out.push(fail("must depend on z only"));
                return Ok(());
            }
            let mut worst: f64 = 0.0;
            let mut smallest = f64::INFINITY;
            for p in pts {
                let j = w.eval(*p, chart)?;
                worst = worst.max(j.wirtinger(Wirtinger::Zbar).norm());
                smallest = smallest.min(j.value.norm());
            }
            if worst > HOLOMORPHY_TOL {
                out.push(Error::NotHolomorphic(worst));
            }
            if form == Form::NonvanishingHolomorphic && smallest < 1e-12 {
                out.push(fail("must not vanish"));
            }
        }
        Form::Radial => {
            if !class.is_radial() {
                out.push(fail("must depend on r2 only"));
            }
        }
        Form::LinearInR2 => {
            if !class.is_radial() {
                out.push(fail("must depend on r2 only"));
                return Ok(());
            }
            for p in pts {
                let d = w.radial_derivatives(r2_at(chart, p)?)?;
                if d[2].norm() > 1e-10 {
                    out.push(fail("must be affine in r2"));
                    break;
                }
            }
        }
    }
    Ok(())
}

/// Lists every constraint of `spec` that `w` violates on `chart` at the
/// given points. An empty list means the weights belong to the case.
pub fn check_constraints(
    spec: &CaseSpec,
    w: &WeightTriple,
    chart: &ConformalChart,
    pts: &[Point4],
) -> Result<Vec<Error>> {
    let mut out = Vec::new();
    check_form(spec.f, "f", &w.f, chart, pts, &mut out)?;
    check_form(spec.a, "a", &w.a, chart, pts, &mut out)?;
    check_form(spec.h, "h", &w.h, chart, pts, &mut out)?;
    if !out.is_empty() {
        return Ok(out);
    }
    let zs: Vec<C64> = pts.iter().map(|p| p.z).collect();
    let k = chart.constant_curvature(&zs)?;
    let mismatch = |required: f64| Error::CurvatureMismatch {
        chart: chart.name().to_string(),
        required,
        found: k,
    };
    match spec.curvature {
        CurvatureLaw::Any => {}
        CurvatureLaw::Flat => {
            if k.abs() > CURVATURE_TOL {
                out.push(mismatch(0.0));
            }
        }
        CurvatureLaw::Slope => {
            let h = constant_real(&w.h, "h")?;
            let f1 = w.f.radial_derivatives(1.0)?[1].re;
            let required = -2.0 * f1 / h;
            if (required - k).abs() > CURVATURE_TOL {
                out.push(mismatch(required));
            }
        }
        CurvatureLaw::Ode => {
            for p in pts {
                let r2 = r2_at(chart, p)?;
                let fp = w.f.radial_derivatives(r2)?[1].re;
                let h = w.h.radial_derivatives(r2)?[0].re;
                if (fp + k * h / 2.0).abs() > CURVATURE_TOL * fp.abs().max(1.0) {
                    out.push(mismatch(-2.0 * fp / h));
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn shifted(w: &Weight, term: &str) -> Result<Weight> {
    match w {
        Weight::Expr(e) => Weight::parse(&format!("({}) + {term}", e.source())),
        Weight::RadialIntegral(_) => Err(Error::Invalid("cannot shift an integral weight".into())),
    }
}

/// A copy of the weights moved by `1e-2` in a direction that breaks the
/// case: a holomorphic `a` picks up `z̄`, a constant `a` picks up `r²`,
/// and an affine `f` has its slope changed.
pub fn perturb(spec: &CaseSpec, w: &WeightTriple) -> Result<Vec<(String, WeightTriple)>> {
    let mut out = Vec::new();
    match spec.a {
        Form::Holomorphic | Form::NonvanishingHolomorphic => out.push((
            "a += 0.01*zbar".to_string(),
            WeightTriple {
                a: shifted(&w.a, "0.01*zbar")?,
                ..w.clone()
            },
        )),
        Form::Constant => out.push((
            "a += 0.01*r2".to_string(),
            WeightTriple {
                a: shifted(&w.a, "0.01*r2")?,
                ..w.clone()
            },
        )),
        _ => {}
    }
    if spec.f == Form::LinearInR2 {
        out.push((
            "f1 += 0.01".to_string(),
            WeightTriple {
                f: shifted(&w.f, "0.01*r2")?,
                ..w.clone()
            },
        ));
    }
    Ok(out)
}

/// Weights `(1 + |a|², a, 1)` on the flat chart for holomorphic `a`.
pub fn flat_example(a: &Expression) -> Result<WeightTriple> {
    if !a.classify().is_base_only() {
        return Err(Error::Invalid(format!("`{}` must depend on z only", a.source())));
    }
    let flat = ConformalChart::flat();
    let mut worst: f64 = 0.0;
    for p in sample_points(&flat, FibreRange::Square { half_width: 1.0 }, 32, 0, 1e-3) {
        let j = a.eval(p, &flat)?;
        worst = worst.max(j.wirtinger(Wirtinger::Zbar).norm());
    }
    if worst > HOLOMORPHY_TOL {
        return Err(Error::NotHolomorphic(worst));
    }
    WeightTriple::parse(&format!("1 + abs2({})", a.source()), a.source(), "1")
}
