//! Ricci form, Einstein residuals and the explicit Ricci-flat families.
//!
//! The Ricci form is stored as the coefficients `c[j][k]` of
//! `ρ = Σ c[j][k] dz_j ∧ dz̄_k` with `z_0 = z`, `z_1 = w`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bundle::COFRAME_REAL;
use crate::error::{Error, Result};
use crate::expr::{complex_literal, real_literal};
use crate::jets::{ln, Jet2, Point4, Wirtinger, C64, I};
use crate::metric::{hermitian_jets, local_jets, metric_jets_wide, LocalJets, Weight, WeightTriple};
use crate::sampling::{sample_points, FibreRange};
use crate::surface::ConformalChart;

pub type FormCoefficients = [[C64; 2]; 2];

const HOLO: [Wirtinger; 2] = [Wirtinger::Z, Wirtinger::W];
const ANTI: [Wirtinger; 2] = [Wirtinger::Zbar, Wirtinger::Wbar];
const CURVATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicciRoute {
    /// `i∂̄∂ log det H` from the assembled Hermitian matrix.
    DetH,
    /// `2K π*ω + i∂̄∂ log Δ`.
    Split,
}

fn i_ddbar(phi: &Jet2) -> FormCoefficients {
    std::array::from_fn(|j| std::array::from_fn(|k| -I * phi.wirtinger2(HOLO[j], ANTI[k])))
}

fn positive_delta(l: &LocalJets) -> Result<Jet2> {
    let d = l.delta();
    if d.value.re <= 0.0 {
        return Err(Error::NonPositiveDelta(d.value.re));
    }
    Ok(d)
}

pub fn ricci_form_from(
    chart: &ConformalChart,
    l: &LocalJets,
    p: Point4,
    route: RicciRoute,
) -> Result<FormCoefficients> {
    let delta = positive_delta(l)?;
    match route {
        RicciRoute::DetH => {
            // H is badly conditioned in the (z, w) frame near the ends of
            // the fibre interval; its determinant cancels terms far larger
            // than itself, so it is formed in double-double
            let h = hermitian_jets(&metric_jets_wide(l));
            let det = (h[0][0] * h[1][1] - h[0][1] * h[1][0]).narrow().re();
            Ok(i_ddbar(&ln(det)?))
        }
        RicciRoute::Split => {
            let k = chart.gauss_curvature(p.z)?;
            let mut c = i_ddbar(&ln(delta)?);
            c[0][0] += I * k * l.lambda.value.re;
            Ok(c)
        }
    }
}

pub fn ricci_form(
    chart: &ConformalChart,
    weights: &WeightTriple,
    p: Point4,
    route: RicciRoute,
) -> Result<FormCoefficients> {
    ricci_form_from(chart, &local_jets(chart, weights, p)?, p, route)
}

pub fn max_abs(c: &FormCoefficients) -> f64 {
    c.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_deviation(a: &FormCoefficients, b: &FormCoefficients) -> f64 {
    (0..2)
        .flat_map(|j| (0..2).map(move |k| (a[j][k] - b[j][k]).norm()))
        .fold(0.0, f64::max)
}

/// How far `c` is from a real form: `max |c[j][k] + conj(c[k][j])|`.
pub fn reality_defect(c: &FormCoefficients) -> f64 {
    (0..2)
        .flat_map(|j| (0..2).map(move |k| (c[j][k] + c[k][j].conj()).norm()))
        .fold(0.0, f64::max)
}

/// The form as a real antisymmetric matrix over `(x, y, s, t)`.
pub fn form_real(c: &FormCoefficients) -> [[f64; 4]; 4] {
    let holo = [COFRAME_REAL[0], COFRAME_REAL[2]];
    let anti = [COFRAME_REAL[1], COFRAME_REAL[3]];
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..2 {
                for k in 0..2 {
                    acc += c[j][k] * (holo[j][a] * anti[k][b] - holo[j][b] * anti[k][a]);
                }
            }
            acc.re
        })
    })
}

/// Residuals of `ρ = (S/4) ω` in the `w w̄`, `z w̄` and `z z̄` slots.
pub fn einstein_residuals_from(chart: &ConformalChart, l: &LocalJets, p: Point4, s: f64) -> Result<[C64; 3]> {
    let log_delta = ln(positive_delta(l)?)?;
    let k = chart.gauss_curvature(p.z)?;
    let lam = l.lambda.value.re;
    let (f, a, h) = (l.f.value, l.a.value, l.h.value);
    let wg = l.w.value * l.gamma.value;
    let c = lam * s / 8.0;
    let e1 = log_delta.wirtinger2(Wirtinger::W, Wirtinger::Wbar) + c * h;
    let e2 = log_delta.wirtinger2(Wirtinger::Z, Wirtinger::Wbar) + c * (a + h * wg);
    let e3 = lam * k
        - log_delta.wirtinger2(Wirtinger::Z, Wirtinger::Zbar)
        - c * (f + a.conj() * wg + a * wg.conj() + h * wg.norm_sqr());
    Ok([e1, e2, e3])
}

pub fn einstein_residuals(
    chart: &ConformalChart,
    weights: &WeightTriple,
    p: Point4,
    s: f64,
) -> Result<[C64; 3]> {
    einstein_residuals_from(chart, &local_jets(chart, weights, p)?, p, s)
}

/// Least-squares `S` for the Einstein system at one point. The residuals
/// are affine in `S`, so two evaluations determine them.
pub fn fit_einstein_constant(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<f64> {
    let l = local_jets(chart, weights, p)?;
    let r0 = einstein_residuals_from(chart, &l, p, 0.0)?;
    let r1 = einstein_residuals_from(chart, &l, p, 1.0)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..3 {
        let b = r1[k] - r0[k];
        num += (b.conj() * r0[k]).re;
        den += b.norm_sqr();
    }
    Ok(-num / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct RicciReport {
    pub rho: FormCoefficients,
    pub route_deviation: f64,
    pub reality_defect: f64,
    pub einstein: [C64; 3],
    pub s: f64,
}

pub fn ricci_report(chart: &ConformalChart, weights: &WeightTriple, p: Point4, s: f64) -> Result<RicciReport> {
    let l = local_jets(chart, weights, p)?;
    let rho = ricci_form_from(chart, &l, p, RicciRoute::DetH)?;
    let split = ricci_form_from(chart, &l, p, RicciRoute::Split)?;
    Ok(RicciReport {
        rho,
        route_deviation: max_deviation(&rho, &split),
        reality_defect: reality_defect(&rho),
        einstein: einstein_residuals_from(chart, &l, p, s)?,
        s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FamilyKind {
    RicciFlatGeneral,
    CyI,
    CyII,
    CyIII,
    CyIV,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::RicciFlatGeneral,
        FamilyKind::CyI,
        FamilyKind::CyII,
        FamilyKind::CyIII,
        FamilyKind::CyIV,
    ];

    /// Curvature the family is stated for; `None` accepts any constant.
    pub fn required_curvature(self) -> Option<f64> {
        match self {
            FamilyKind::RicciFlatGeneral => None,
            FamilyKind::CyI => Some(0.0),
            FamilyKind::CyII | FamilyKind::CyIII => Some(1.0),
            FamilyKind::CyIV => Some(-1.0),
        }
    }

    pub fn default_chart(self) -> ConformalChart {
        match self {
            FamilyKind::CyI => ConformalChart::flat(),
            FamilyKind::CyII | FamilyKind::CyIII => ConformalChart::sphere(),
            FamilyKind::CyIV | FamilyKind::RicciFlatGeneral => ConformalChart::hyperbolic(),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::RicciFlatGeneral => "ricci-flat-general",
            FamilyKind::CyI => "cy-i",
            FamilyKind::CyII => "cy-ii",
            FamilyKind::CyIII => "cy-iii",
            FamilyKind::CyIV => "cy-iv",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown family `{s}` (expected ricci-flat-general, cy-i, cy-ii, cy-iii or cy-iv)"
                ))
            })
    }
}

impl TryFrom<String> for FamilyKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FamilyKind> for String {
    fn from(v: FamilyKind) -> String {
        v.to_string()
    }
}

/// Family parameters; `None` takes the per-family default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub a: Option<C64>,
    pub c0: Option<f64>,
    pub f: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub kind: FamilyKind,
    pub a: C64,
    pub c0: f64,
    /// The constant `f` of the flat family; unused elsewhere.
    pub f: f64,
    pub curvature: f64,
    pub weights: WeightTriple,
    /// Open `r²` interval of validity.
    pub domain: (f64, f64),
}

/// Positive root of `|a|² x² + c₀ x − 1`, computed without cancellation.
pub fn beta_plus(a: C64, c0: f64) -> f64 {
    let a2 = a.norm_sqr();
    let s = (c0 * c0 + 4.0 * a2).sqrt();
    if c0 >= 0.0 {
        2.0 / (c0 + s)
    } else {
        (s - c0) / (2.0 * a2)
    }
}

impl SolutionFamily {
    /// `r⁴ Δ`, identically 1 for every family.
    pub fn psi(&self, r2: f64) -> Result<f64> {
        let f = self.weights.f.radial_derivatives(r2)?[0].re;
        let h = self.weights.h.radial_derivatives(r2)?[0].re;
        Ok(r2 * r2 * (f * h - self.a.norm_sqr()))
    }

    pub fn sample(&self, chart: &ConformalChart, n: usize, seed: u64) -> Vec<Point4> {
        let (lo, hi) = self.domain;
        sample_points(chart, FibreRange::interior(lo, hi, 1e-2), n, seed, 1e-3)
    }

    /// Weight values at `r²`.
    pub fn radial_values(&self, r2: f64) -> Result<(f64, f64)> {
        Ok((
            self.weights.f.radial_derivatives(r2)?[0].re,
            self.weights.h.radial_derivatives(r2)?[0].re,
        ))
    }
}

/// The family's weights as radial expressions, with its validity interval.
pub fn make_family(kind: FamilyKind, params: &FamilyParams, chart: &ConformalChart) -> Result<SolutionFamily> {
    let zs: Vec<C64> = sample_points(chart, FibreRange::Square { half_width: 1.0 }, 64, 0, 1e-3)
        .into_iter()
        .map(|p| p.z)
        .collect();
    let k = chart.constant_curvature(&zs)?;
    if let Some(required) = kind.required_curvature() {
        if (k - required).abs() > CURVATURE_TOL {
            return Err(Error::CurvatureMismatch {
                chart: chart.name().to_string(),
                required,
                found: k,
            });
        }
    }
    let default_a = match kind {
        FamilyKind::RicciFlatGeneral | FamilyKind::CyII => C64::new(0.0, 0.0),
        _ => C64::new(1.0, 0.0),
    };
    let a = params.a.unwrap_or(default_a);
    let c0 = params.c0.unwrap_or(match kind {
        FamilyKind::CyII | FamilyKind::RicciFlatGeneral | FamilyKind::CyIV => 1.0,
        _ => 0.0,
    });
    let f = params.f.unwrap_or(1.0);
    let a2 = a.norm_sqr();
    let gate = |msg: &str| Err(Error::ParameterGate(msg.to_string()));
    match kind {
        FamilyKind::CyI => {
            if f <= 0.0 {
                return gate("cy-i needs f > 0");
            }
            if a2 == 0.0 {
                return gate("cy-i needs a != 0 for completeness");
            }
        }
        FamilyKind::CyII => {
            if c0 <= 0.0 {
                return gate("cy-ii needs c0 > 0");
            }
            if a2 != 0.0 {
                return gate("cy-ii has a = 0");
            }
        }
        FamilyKind::CyIII | FamilyKind::CyIV => {
            if a2 == 0.0 {
                return gate("cy-iii and cy-iv need a != 0");
            }
        }
        FamilyKind::RicciFlatGeneral => {
            if k.abs() <= CURVATURE_TOL && f <= 0.0 {
                return gate("the flat solution needs f > 0");
            }
        }
    }

    let lit = real_literal;
    let a2s = lit(a2);
    let flat = k.abs() <= CURVATURE_TOL;
    // f² r² = −K (|a|² r⁴ + c₀ r² − 1) and h = (|a|² r⁴ + 1) / (r⁴ f)
    let quartic = format!("{} * ({a2s} * r2^2 + {} * r2 - 1)", lit(-k), lit(c0));
    let (f_src, h_src) = if flat {
        (
            lit(f),
            format!("{a2s} / {} + 1 / ({} * r2^2)", lit(f), lit(f)),
        )
    } else {
        (
            format!("sqrt({quartic}) / sqrt(r2)"),
            format!("({a2s} * r2^2 + 1) / (r2 * sqrt(r2) * sqrt({quartic}))"),
        )
    };
    let domain = if flat {
        (0.0, f64::INFINITY)
    } else if a2 > 0.0 {
        let b = beta_plus(a, c0);
        if k > 0.0 {
            (0.0, b)
        } else {
            (b, f64::INFINITY)
        }
    } else if k > 0.0 {
        if c0 > 0.0 {
            (0.0, 1.0 / c0)
        } else {
            (0.0, f64::INFINITY)
        }
    } else if c0 > 0.0 {
        (1.0 / c0, f64::INFINITY)
    } else {
        return gate("with a = 0 and K < 0 the solution needs c0 > 0");
    };
    let weights = WeightTriple {
        f: Weight::parse(&f_src)?,
        a: Weight::parse(&complex_literal(a))?,
        h: Weight::parse(&h_src)?,
    };
    Ok(SolutionFamily {
        kind,
        a,
        c0,
        f,
        curvature: k,
        weights,
        domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::closedness_residual;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flat_sasaki_has_zero_ricci_form() {
        let p = Point4::new(c(0.3, -0.2), c(0.7, 0.4));
        for route in [RicciRoute::DetH, RicciRoute::Split] {
            let rho = ricci_form(&ConformalChart::flat(), &WeightTriple::sasaki(), p, route).unwrap();
            assert!(max_abs(&rho) < 1e-14);
        }
    }

    #[test]
    fn sphere_sasaki_ricci_is_twice_base_form() {
        let chart = ConformalChart::sphere();
        for p in sample_points(&chart, FibreRange::Square { half_width: 1.0 }, 50, 1, 1e-3) {
            let lam = chart.lambda_value(p.z).unwrap();
            let split = ricci_form(&chart, &WeightTriple::sasaki(), p, RicciRoute::Split).unwrap();
            let det = ricci_form(&chart, &WeightTriple::sasaki(), p, RicciRoute::DetH).unwrap();
            assert!((split[0][0] - I * lam).norm() < 1e-12);
            assert!(max_abs(&[[c(0.0, 0.0), split[0][1]], [split[1][0], split[1][1]]]) < 1e-12);
            assert!(max_deviation(&split, &det) < 1e-9);
        }
    }

    #[test]
    fn sphere_sasaki_einstein_third_residual_is_lambda_k() {
        let chart = ConformalChart::sphere();
        let p = Point4::new(c(0.4, 0.1), c(0.3, -0.2));
        let r = einstein_residuals(&chart, &WeightTriple::sasaki(), p, 0.0).unwrap();
        let lam = chart.lambda_value(p.z).unwrap();
        assert!(r[0].norm() < 1e-14 && r[1].norm() < 1e-14);
        assert!((r[2] - lam).norm() < 1e-12);
    }

    #[test]
    fn non_positive_delta_is_rejected() {
        let w = WeightTriple::constants(1.0, c(2.0, 0.0), 1.0);
        let err = ricci_form(&ConformalChart::flat(), &w, Point4::from_real(0.0, 0.0, 1.0, 0.0), RicciRoute::Split)
            .unwrap_err();
        assert!(matches!(err, Error::NonPositiveDelta(_)));
    }

    #[test]
    fn beta_plus_is_the_positive_root() {
        assert_eq!(beta_plus(c(1.0, 0.0), 0.0), 1.0);
        assert!((beta_plus(c(1.0, 0.0), 1.0) - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        for (a, c0) in [(0.3, 5.0), (2.0, -7.0), (1e-3, 1.0), (1.0, -1e3)] {
            let b = beta_plus(c(a, 0.0), c0);
            assert!(b > 0.0);
            assert!((a * a * b * b + c0 * b - 1.0).abs() < 1e-12, "{a} {c0}");
        }
    }

    #[test]
    fn cy_iii_domain_closes_at_beta() {
        let fam = make_family(
            FamilyKind::CyIII,
            &FamilyParams {
                a: Some(c(1.0, 0.0)),
                c0: Some(0.0),
                f: None,
            },
            &ConformalChart::sphere(),
        )
        .unwrap();
        assert_eq!(fam.domain, (0.0, 1.0));
    }

    #[test]
    fn cy_i_weights_match_closed_form() {
        let fam = make_family(FamilyKind::CyI, &FamilyParams::default(), &ConformalChart::flat()).unwrap();
        for r2 in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let (f, h) = fam.radial_values(r2).unwrap();
            assert_eq!(f, 1.0);
            let want = 1.0 + 1.0 / (r2 * r2);
            assert!((h - want).abs() < 1e-14 * want);
            assert!((fam.psi(r2).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cy_iv_positive_beyond_beta() {
        let fam = make_family(FamilyKind::CyIV, &FamilyParams::default(), &ConformalChart::hyperbolic()).unwrap();
        let b = (5f64.sqrt() - 1.0) / 2.0;
        assert!((fam.domain.0 - b).abs() < 1e-15);
        for k in 1..50 {
            let r2 = b + 0.01 * k as f64 * k as f64;
            // independent root check: the radicand vanishes only at β₊
            assert!(r2 * r2 + r2 - 1.0 > 0.0);
            let (f, _) = fam.radial_values(r2).unwrap();
            assert!(f > 0.0);
        }
    }

    #[test]
    fn gates_and_mismatches() {
        let flat = ConformalChart::flat();
        let sphere = ConformalChart::sphere();
        assert!(matches!(
            make_family(FamilyKind::CyII, &FamilyParams::default(), &flat),
            Err(Error::CurvatureMismatch { .. })
        ));
        let neg = FamilyParams {
            c0: Some(-1.0),
            ..Default::default()
        };
        assert!(matches!(make_family(FamilyKind::CyII, &neg, &sphere), Err(Error::ParameterGate(_))));
        let zero_a = FamilyParams {
            a: Some(c(0.0, 0.0)),
            ..Default::default()
        };
        assert!(matches!(make_family(FamilyKind::CyI, &zero_a, &flat), Err(Error::ParameterGate(_))));
        assert!("cy-v".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn families_are_kahler_and_ricci_flat() {
        for kind in FamilyKind::ALL {
            let chart = kind.default_chart();
            let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
            for p in fam.sample(&chart, 100, 11) {
                let (r1, r2) = closedness_residual(&chart, &fam.weights, p).unwrap();
                assert!(r1.norm().max(r2.norm()) < 1e-9, "{kind}");
                let rep = ricci_report(&chart, &fam.weights, p, 0.0).unwrap();
                assert!(max_abs(&rep.rho) < 1e-8, "{kind}: {}", max_abs(&rep.rho));
                assert!(rep.route_deviation < 1e-9, "{kind}");
                assert!(rep.reality_defect < 1e-10);
                assert!(rep.einstein.iter().all(|e| e.norm() < 1e-9), "{kind}");
                let lam = chart.lambda_value(p.z).unwrap();
                let r2v = lam * p.w.norm_sqr();
                assert!((fam.psi(r2v).unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fitted_einstein_constant_vanishes_for_flat_families() {
        let chart = ConformalChart::flat();
        let fam = make_family(FamilyKind::CyI, &FamilyParams::default(), &chart).unwrap();
        for p in fam.sample(&chart, 10, 2) {
            assert!(fit_einstein_constant(&chart, &fam.weights, p).unwrap().abs() < 1e-8);
        }
    }
}
