//! Conformal charts of the base surface: `g = λ dz dz̄` on a planar domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Env, Expression};
use crate::jets::{self, Jet2, Jet3, Point4, Scalar, Wirtinger, C64};

/// Imaginary parts of `λ` above this (relative) are reported as errors.
const REALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Plane,
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// `Im z > 0`.
    HalfPlane,
    /// `[0, width) × [0, height)`, a fundamental domain of a lattice.
    Rectangle { width: f64, height: f64 },
}

impl Domain {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Domain::Plane => z.re.is_finite() && z.im.is_finite(),
            Domain::Disk { radius } => z.norm() < radius,
            Domain::Annulus { inner, outer } => {
                let r = z.norm();
                r > inner && r < outer
            }
            Domain::HalfPlane => z.im > 0.0,
            Domain::Rectangle { width, height } => {
                (0.0..width).contains(&z.re) && (0.0..height).contains(&z.im)
            }
        }
    }

    /// Maps a point of the unit square into a bounded sampling region
    /// of the domain, keeping `margin` away from every boundary.
    ///
    /// Unbounded domains are truncated: the plane to `|z| < 2`, the
    /// half-plane to `[-2, 2] × [0.1, 2]`. Disks are sampled out to 90% of
    /// their radius so that conformal factors blowing up at the rim stay
    /// moderate.
    pub fn sample(&self, u: [f64; 2], margin: f64) -> C64 {
        let tau = std::f64::consts::TAU;
        match *self {
            Domain::Plane => C64::from_polar(2.0 * u[0].sqrt(), tau * u[1]),
            Domain::Disk { radius } => {
                let r = (0.9 * radius).min(radius - margin);
                C64::from_polar(r * u[0].sqrt(), tau * u[1])
            }
            Domain::Annulus { inner, outer } => {
                let (a, b) = (inner + margin, outer - margin);
                let r = (a * a + (b * b - a * a) * u[0]).sqrt();
                C64::from_polar(r, tau * u[1])
            }
            Domain::HalfPlane => C64::new(-2.0 + 4.0 * u[0], 0.1 + 1.9 * u[1]),
            Domain::Rectangle { width, height } => C64::new(
                margin + (width - 2.0 * margin) * u[0],
                margin + (height - 2.0 * margin) * u[1],
            ),
        }
    }
}

/// The conformal factor and its Christoffel coefficient at one point, as
/// jets in `(x, y, s, t)`.
#[derive(Debug, Clone, Copy)]
pub struct BaseJets {
    pub lambda: Jet2,
    /// `Γ = ∂z log λ`.
    pub gamma: Jet2,
    pub gamma_bar: Jet2,
}

#[derive(Debug, Clone)]
pub struct ConformalChart {
    name: String,
    lambda: Expression,
    domain: Domain,
    curvature: Option<f64>,
}

impl ConformalChart {
    /// A chart with a user-supplied conformal factor; `lambda` may only use
    /// `z` and `zbar`.
    pub fn new(name: impl Into<String>, lambda: Expression, domain: Domain) -> Result<Self> {
        if !lambda.classify().is_base_only() {
            return Err(Error::Invalid(format!(
                "conformal factor `{}` must depend on z, zbar only",
                lambda.source()
            )));
        }
        Ok(ConformalChart {
            name: name.into(),
            lambda,
            domain,
            curvature: None,
        })
    }

    fn builtin(name: &str, lambda: &str, domain: Domain, k: f64) -> Self {
        ConformalChart {
            name: name.to_string(),
            lambda: Expression::parse(lambda).expect("built-in conformal factor parses"),
            domain,
            curvature: Some(k),
        }
    }

    pub fn flat() -> Self {
        Self::builtin("flat", "1", Domain::Plane, 0.0)
    }

    pub fn flat_torus() -> Self {
        Self::builtin(
            "flat-torus",
            "1",
            Domain::Rectangle {
                width: 1.0,
                height: 1.0,
            },
            0.0,
        )
    }

    pub fn sphere() -> Self {
        Self::builtin("sphere", "4/(1+abs2(z))^2", Domain::Plane, 1.0)
    }

    pub fn hyperbolic() -> Self {
        Self::builtin(
            "hyperbolic",
            "4/(1-abs2(z))^2",
            Domain::Disk { radius: 1.0 },
            -1.0,
        )
    }

    pub const MODEL_NAMES: [&'static str; 4] = ["flat", "flat-torus", "sphere", "hyperbolic"];

    pub fn model(name: &str) -> Result<Self> {
        match name {
            "flat" | "plane" => Ok(Self::flat()),
            "flat-torus" | "torus" => Ok(Self::flat_torus()),
            "sphere" => Ok(Self::sphere()),
            "hyperbolic" | "disk" => Ok(Self::hyperbolic()),
            other => Err(Error::Invalid(format!(
                "unknown chart model `{other}` (expected one of {})",
                Self::MODEL_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lambda(&self) -> &Expression {
        &self.lambda
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// The known constant curvature of a built-in model.
    pub fn model_curvature(&self) -> Option<f64> {
        self.curvature
    }

    /// Same chart with the conformal factor multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let src = format!("{} * ({})", crate::expr::real_literal(c), self.lambda.source());
        ConformalChart {
            name: format!("{}-scaled", self.name),
            lambda: Expression::parse(&src).expect("scaled factor parses"),
            domain: self.domain,
            curvature: self.curvature.map(|k| k / c),
        }
    }

    pub fn check_contains(&self, z: C64) -> Result<()> {
        if self.domain.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideChart {
                chart: self.name.clone(),
                re: z.re,
                im: z.im,
            })
        }
    }

    fn check_lambda(&self, v: C64) -> Result<()> {
        if v.im.abs() > REALITY_TOL * v.norm().max(1.0) {
            return Err(Error::Reality {
                what: format!("conformal factor of `{}`", self.name),
                imag: v.im,
            });
        }
        if v.re <= 0.0 {
            return Err(Error::Domain(format!(
                "conformal factor of `{}` is not positive ({})",
                self.name, v.re
            )));
        }
        Ok(())
    }

    /// `λ(z)` as a plain number.
    pub fn lambda_value(&self, z: C64) -> Result<f64> {
        self.check_contains(z)?;
        let v = self
            .lambda
            .eval_with(&Env::values(Point4::new(z, C64::new(0.0, 0.0)), None))?;
        self.check_lambda(v)?;
        Ok(v.re)
    }

    /// `λ` to third order; needed because `Γ` itself must be carried to
    /// second order.
    fn lambda_jet3(&self, p: Point4) -> Result<Jet3> {
        let [x, y, s, t] = p.coords();
        let vars = [
            Jet3::variable(0, C64::new(x, 0.0)),
            Jet3::variable(1, C64::new(y, 0.0)),
            Jet3::variable(2, C64::new(s, 0.0)),
            Jet3::variable(3, C64::new(t, 0.0)),
        ];
        self.lambda.eval_with(&Env::from_real(vars))
    }

    pub fn base_jets(&self, p: Point4) -> Result<BaseJets> {
        self.check_contains(p.z)?;
        let l3 = self.lambda_jet3(p)?;
        self.check_lambda(l3.value)?;
        let lambda = l3.truncate();
        let gamma = jets::div(l3.wirtinger_jet(Wirtinger::Z), lambda)?;
        Ok(BaseJets {
            lambda,
            gamma,
            gamma_bar: gamma.conj(),
        })
    }

    /// `λ` as a [`Jet2`] (cheaper than [`Self::base_jets`]).
    pub fn lambda_jet(&self, p: Point4) -> Result<Jet2> {
        self.check_contains(p.z)?;
        let l = self.lambda.eval_with(&Env::from_real(jets::seed_variables(p)))?;
        self.check_lambda(l.value)?;
        Ok(l)
    }

    /// `Γ = (1/λ) ∂λ/∂z`.
    pub fn gamma(&self, z: C64) -> Result<C64> {
        let l = self.lambda_jet(Point4::new(z, C64::new(0.0, 0.0)))?;
        Ok(l.wirtinger(Wirtinger::Z) / l.value)
    }

    /// `K = −(2/λ) ∂z∂z̄ log λ`.
    pub fn gauss_curvature(&self, z: C64) -> Result<f64> {
        let l = self.lambda_jet(Point4::new(z, C64::new(0.0, 0.0)))?;
        let log_l = jets::ln(l)?;
        let k = -2.0 * log_l.wirtinger2(Wirtinger::Z, Wirtinger::Zbar) / l.value;
        if k.im.abs() > 1e-10 * k.norm().max(1.0) {
            return Err(Error::Reality {
                what: "Gauss curvature".into(),
                imag: k.im,
            });
        }
        Ok(k.re)
    }

    /// Mean and sample standard deviation of `K` over the given points.
    pub fn curvature_statistics(&self, zs: &[C64]) -> Result<(f64, f64)> {
        let ks = zs
            .iter()
            .map(|&z| self.gauss_curvature(z))
            .collect::<Result<Vec<_>>>()?;
        let n = ks.len() as f64;
        let mean = ks.iter().sum::<f64>() / n;
        let var = if ks.len() > 1 {
            ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok((mean, var.sqrt()))
    }

    /// Constant curvature of the chart: the model value if known, otherwise
    /// measured at the given points and required to be constant to `1e-8`.
    pub fn constant_curvature(&self, zs: &[C64]) -> Result<f64> {
        if let Some(k) = self.curvature {
            return Ok(k);
        }
        let (mean, std) = self.curvature_statistics(zs)?;
        if std > 1e-8 {
            return Err(Error::Invalid(format!(
                "chart `{}` does not have constant curvature (std {std:e})",
                self.name
            )));
        }
        Ok(mean)
    }
}

/// A holomorphic change of coordinates `z₁ = F(z)` with inverse `z = G(z₁)`.
/// Both expressions are written in the identifier `z`.
#[derive(Debug, Clone)]
pub struct ChartTransition {
    pub forward: Expression,
    pub inverse: Expression,
}

impl ChartTransition {
    pub fn new(forward: Expression, inverse: Expression) -> Result<Self> {
        for e in [&forward, &inverse] {
            if !e.classify().is_base_only() {
                return Err(Error::Invalid(format!(
                    "transition `{}` must depend on z only",
                    e.source()
                )));
            }
        }
        Ok(ChartTransition { forward, inverse })
    }

    pub fn identity() -> Self {
        let z = Expression::parse("z").unwrap();
        ChartTransition {
            forward: z.clone(),
            inverse: z,
        }
    }

    /// The sphere's inversion `z₁ = 1/z`.
    pub fn inversion() -> Self {
        let e = Expression::parse("1/z").unwrap();
        ChartTransition {
            forward: e.clone(),
            inverse: e,
        }
    }

    fn jet(e: &Expression, z: C64) -> Result<Jet2> {
        e.eval_with(&Env::from_real(jets::seed_variables(Point4::new(
            z,
            C64::new(0.0, 0.0),
        ))))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TransitionReport {
    pub samples: usize,
    /// `|G(F(z)) − z|`.
    pub identity: f64,
    /// Relative deviation of `λ₁(z₁)` from `|∂z/∂z₁|² λ(z)`.
    pub lambda: f64,
    /// Deviation of `Γ₁` from `(∂z/∂z₁) Γ + (∂z₁/∂z)(∂²z/∂z₁²)`.
    pub gamma: f64,
    /// Deviation of `w₁ = (∂z₁/∂z) w` from the real-Jacobian pushforward of
    /// the fibre vector, together with the invariance of `r²`.
    pub fibre: f64,
    /// Deviation of the pulled-back `η₁` from `(∂z₁/∂z) η`.
    pub eta: f64,
}

impl TransitionReport {
    pub fn max(&self) -> f64 {
        self.identity
            .max(self.lambda)
            .max(self.gamma)
            .max(self.fibre)
            .max(self.eta)
    }
}

/// Checks the transformation laws of `λ`, `Γ`, `w` and `η` between chart
/// `c` (coordinate `z`) and chart `c1` (coordinate `z₁ = F(z)`).
pub fn verify_transition(
    t: &ChartTransition,
    c: &ConformalChart,
    c1: &ConformalChart,
    samples: &[Point4],
) -> Result<TransitionReport> {
    let mut rep = TransitionReport {
        samples: samples.len(),
        ..Default::default()
    };
    for p in samples {
        let (z, w) = (p.z, p.w);
        let fj = ChartTransition::jet(&t.forward, z)?;
        let z1 = fj.value;
        let f1 = fj.wirtinger(Wirtinger::Z);
        let f2 = fj.wirtinger2(Wirtinger::Z, Wirtinger::Z);
        let gj = ChartTransition::jet(&t.inverse, z1)?;
        let g1 = gj.wirtinger(Wirtinger::Z);
        let g2 = gj.wirtinger2(Wirtinger::Z, Wirtinger::Z);
        rep.identity = rep.identity.max((gj.value - z).norm());

        let lam = c.lambda_value(z)?;
        let lam1 = c1.lambda_value(z1)?;
        let expected = g1.norm_sqr() * lam;
        rep.lambda = rep.lambda.max((lam1 - expected).abs() / expected);

        let gamma = c.gamma(z)?;
        let gamma1 = c1.gamma(z1)?;
        let expected = g1 * gamma + f1 * g2;
        rep.gamma = rep
            .gamma
            .max((gamma1 - expected).norm() / expected.norm().max(1.0));

        // real Jacobian of F applied to the fibre vector (s, t)
        let w1 = f1 * w;
        let pushed = fj.grad[0] * w.re + fj.grad[1] * w.im;
        let r2 = lam * w.norm_sqr();
        let r2_1 = lam1 * w1.norm_sqr();
        let dev = (w1 - pushed).norm() / w1.norm().max(1.0);
        let dev_r2 = (r2_1 - r2).abs() / r2.max(1.0);
        rep.fibre = rep.fibre.max(dev).max(dev_r2);

        // η₁ = w₁Γ₁ dz₁ + dw₁ with dz₁ = F'dz, dw₁ = F''w dz + F'dw
        let eta1_dz = w1 * gamma1 * f1 + f2 * w;
        let eta1_dw = f1;
        let want_dz = f1 * w * gamma;
        let want_dw = f1;
        let scale = want_dz.norm().max(want_dw.norm()).max(1.0);
        let dev = (eta1_dz - want_dz).norm().max((eta1_dw - want_dw).norm()) / scale;
        rep.eta = rep.eta.max(dev);
    }
    Ok(rep)
}
