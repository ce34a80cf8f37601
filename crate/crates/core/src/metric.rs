//! Ciconia metrics `g = (λ/2)(f dz·dz̄ + a dz·η̄ + ā η·dz̄ + h η·η̄)` on the
//! tangent manifold, assembled in real coordinates `(x, y, s, t)` with
//! `z = x + iy`, `w = s + it`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bundle::{fibre_jets, FrameData, COFRAME_REAL};
use crate::error::{Error, Result};
use crate::expr::{DependenceClass, Env, Expression};
use crate::jets::{seed_variables, Jet2, Point4, Scalar, Wirtinger, C64, I};
use crate::quad;
use crate::wide::WideJet;
use crate::surface::ConformalChart;

const REALITY_TOL: f64 = 1e-9;
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `f(r²) = f0 + scale · ∫₀^{r²} g(u) du` for a radial integrand `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialIntegral {
    pub f0: f64,
    pub scale: f64,
    pub integrand: Expression,
}

impl RadialIntegral {
    pub fn new(f0: f64, scale: f64, integrand: Expression) -> Result<Self> {
        if !integrand.classify().is_radial() {
            return Err(Error::Invalid(format!(
                "integrand `{}` must be radial",
                integrand.source()
            )));
        }
        Ok(RadialIntegral {
            f0,
            scale,
            integrand,
        })
    }

    fn integrand_real(&self, u: f64) -> Result<f64> {
        let v = self.integrand.eval_with(&Env::radial(C64::new(u, 0.0)))?;
        if v.im.abs() > REALITY_TOL * v.norm().max(1.0) {
            return Err(Error::Reality {
                what: format!("integrand `{}`", self.integrand.source()),
                imag: v.im,
            });
        }
        Ok(v.re)
    }

    /// Value and first three derivatives in `r²`.
    pub fn derivatives(&self, r2: f64) -> Result<[C64; 4]> {
        let integral = quad::integrate(|u| self.integrand_real(u), 0.0, r2, 1e-13, 1e-12)?;
        let d = self.integrand.radial_derivatives(r2)?;
        Ok([
            C64::new(self.f0 + self.scale * integral, 0.0),
            d[0] * self.scale,
            d[1] * self.scale,
            d[2] * self.scale,
        ])
    }
}

/// One weight function: an expression, or a radial function defined by
/// an integral.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Expr(Expression),
    RadialIntegral(RadialIntegral),
}

impl Weight {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Weight::Expr(Expression::parse(src)?))
    }

    pub fn constant(c: C64) -> Self {
        Weight::Expr(Expression::constant(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn class(&self) -> DependenceClass {
        match self {
            Weight::Expr(e) => e.classify(),
            Weight::RadialIntegral(_) => DependenceClass::Radial,
        }
    }

    pub fn expression(&self) -> Option<&Expression> {
        match self {
            Weight::Expr(e) => Some(e),
            Weight::RadialIntegral(_) => None,
        }
    }

    pub fn constant_value(&self) -> Option<C64> {
        self.expression().and_then(|e| e.constant_value())
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Expr(e) => e.source().to_string(),
            Weight::RadialIntegral(r) => format!(
                "{} + {} * integral_0^r2 ({})",
                r.f0,
                r.scale,
                r.integrand.source()
            ),
        }
    }

    pub fn eval(&self, p: Point4, chart: &ConformalChart) -> Result<Jet2> {
        match self {
            Weight::Expr(e) => e.eval(p, chart),
            Weight::RadialIntegral(r) => {
                let lambda = chart.lambda_jet(p)?;
                let (w, wb) = fibre_jets(p);
                let r2 = lambda * w * wb;
                Ok(r2.compose(r.derivatives(r2.value.re)?))
            }
        }
    }

    /// Value and first two `r²`-derivatives of a radial weight.
    pub fn radial_derivatives(&self, r2: f64) -> Result<[C64; 3]> {
        match self {
            Weight::Expr(e) => e.radial_derivatives(r2),
            Weight::RadialIntegral(r) => {
                let d = r.derivatives(r2)?;
                Ok([d[0], d[1], d[2]])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTriple {
    pub f: Weight,
    pub a: Weight,
    pub h: Weight,
}

impl WeightTriple {
    pub fn parse(f: &str, a: &str, h: &str) -> Result<Self> {
        Ok(WeightTriple {
            f: Weight::parse(f)?,
            a: Weight::parse(a)?,
            h: Weight::parse(h)?,
        })
    }

    pub fn constants(f: f64, a: C64, h: f64) -> Self {
        WeightTriple {
            f: Weight::real(f),
            a: Weight::constant(a),
            h: Weight::real(h),
        }
    }

    /// `f = h = 1`, `a = 0`.
    pub fn sasaki() -> Self {
        Self::constants(1.0, C64::new(0.0, 0.0), 1.0)
    }

    pub fn classes(&self) -> [DependenceClass; 3] {
        [self.f.class(), self.a.class(), self.h.class()]
    }

    /// Point values `(f, a, h, Δ)`.
    pub fn values(&self, chart: &ConformalChart, p: Point4) -> Result<(f64, C64, f64, f64)> {
        let l = local_jets(chart, self, p)?;
        let (f, a, h) = (l.f.value.re, l.a.value, l.h.value.re);
        Ok((f, a, h, f * h - a.norm_sqr()))
    }
}

/// Everything the metric depends on at one point, as jets.
#[derive(Debug, Clone, Copy)]
pub struct LocalJets {
    pub lambda: Jet2,
    pub gamma: Jet2,
    pub gamma_bar: Jet2,
    pub w: Jet2,
    pub wbar: Jet2,
    pub f: Jet2,
    pub a: Jet2,
    pub abar: Jet2,
    pub h: Jet2,
}

impl LocalJets {
    /// `Δ = fh − |a|²`.
    pub fn delta(&self) -> Jet2 {
        self.f * self.h - self.a * self.abar
    }
}

fn real_weight(j: Jet2, name: &str, src: &Weight) -> Result<Jet2> {
    if j.value.im.abs() > REALITY_TOL * j.value.norm().max(1.0) {
        return Err(Error::Reality {
            what: format!("weight {name} = `{}`", src.describe()),
            imag: j.value.im,
        });
    }
    Ok(j.re())
}

pub fn local_jets(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<LocalJets> {
    let base = chart.base_jets(p)?;
    let (w, wbar) = fibre_jets(p);
    let f = real_weight(weights.f.eval(p, chart)?, "f", &weights.f)?;
    let h = real_weight(weights.h.eval(p, chart)?, "h", &weights.h)?;
    let a = weights.a.eval(p, chart)?;
    Ok(LocalJets {
        lambda: base.lambda,
        gamma: base.gamma,
        gamma_bar: base.gamma_bar,
        w,
        wbar,
        f,
        a,
        abar: a.conj(),
        h,
    })
}

/// Jet arithmetic the assembly needs, so the same formulas can run in
/// wider precision.
pub trait AssemblyJet: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn lift(j: Jet2) -> Self;
    fn times(&self, c: C64) -> Self;
    fn real_part(&self) -> Self;
}

impl AssemblyJet for Jet2 {
    fn lift(j: Jet2) -> Self {
        j
    }
    fn times(&self, c: C64) -> Self {
        Scalar::scale(self, c)
    }
    fn real_part(&self) -> Self {
        self.re()
    }
}

impl AssemblyJet for WideJet {
    fn lift(j: Jet2) -> Self {
        WideJet::from(j)
    }
    fn times(&self, c: C64) -> Self {
        self.scale(c)
    }
    fn real_part(&self) -> Self {
        self.re()
    }
}

/// Components `G_ij` over `(x, y, s, t)` as jets.
pub fn metric_jets(l: &LocalJets) -> [[Jet2; 4]; 4] {
    assemble_metric(l)
}

/// [`metric_jets`] carried in double-double arithmetic.
pub fn metric_jets_wide(l: &LocalJets) -> [[WideJet; 4]; 4] {
    assemble_metric(l)
}

fn assemble_metric<J: AssemblyJet>(l: &LocalJets) -> [[J; 4]; 4] {
    let c = |v: C64| J::lift(Jet2::constant(v));
    let one = c(C64::new(1.0, 0.0));
    let dz = COFRAME_REAL[0].map(c);
    let dzb = COFRAME_REAL[1].map(c);
    let (f, a, abar, h) = (J::lift(l.f), J::lift(l.a), J::lift(l.abar), J::lift(l.h));
    let wg = J::lift(l.w) * J::lift(l.gamma);
    let wgb = J::lift(l.wbar) * J::lift(l.gamma_bar);
    let eta = [wg, wg.times(I), one, c(I)];
    let eta_b = [wgb, wgb.times(-I), one, c(-I)];
    let half_lambda = J::lift(l.lambda).times(C64::new(0.5, 0.0));
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let s = f * (dz[i] * dzb[j] + dzb[i] * dz[j])
                + a * (dz[i] * eta_b[j] + eta_b[i] * dz[j])
                + abar * (eta[i] * dzb[j] + dzb[i] * eta[j])
                + h * (eta[i] * eta_b[j] + eta_b[i] * eta[j]);
            (half_lambda * s).real_part()
        })
    })
}

/// `H_{jk̄} = 2 G(∂_j, ∂̄_k)` on the holomorphic frame `(∂z, ∂w)`.
pub fn hermitian_jets<J: AssemblyJet>(g: &[[J; 4]; 4]) -> [[J; 2]; 2] {
    let holo = [Wirtinger::Z.coefficients(), Wirtinger::W.coefficients()];
    let anti = [Wirtinger::Zbar.coefficients(), Wirtinger::Wbar.coefficients()];
    std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let mut acc = J::lift(Jet2::constant(C64::new(0.0, 0.0)));
            for a in 0..4 {
                for b in 0..4 {
                    let coeff = 2.0 * holo[j][a] * anti[k][b];
                    if coeff != C64::new(0.0, 0.0) {
                        acc = acc + g[a][b].times(coeff);
                    }
                }
            }
            acc
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signature {
    Riemannian,
    NegativeDefinite,
    Split,
    Degenerate,
    /// Any other inertia; never produced by a ciconia metric.
    Indefinite { positive: usize, negative: usize },
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signature::Riemannian => f.write_str("riemannian"),
            Signature::NegativeDefinite => f.write_str("negative-definite"),
            Signature::Split => f.write_str("split"),
            Signature::Degenerate => f.write_str("degenerate"),
            Signature::Indefinite { positive, negative } => {
                write!(f, "indefinite({positive},{negative})")
            }
        }
    }
}

/// Signature from the sign of `f` and `Δ = fh − |a|²`.
pub fn signature_from_weights(f: f64, a: C64, h: f64) -> Signature {
    let delta = f * h - a.norm_sqr();
    if delta.abs() < DEGENERACY_TOL || (f.abs() < DEGENERACY_TOL && a.norm() < DEGENERACY_TOL) {
        Signature::Degenerate
    } else if delta < 0.0 {
        Signature::Split
    } else if f > 0.0 {
        Signature::Riemannian
    } else {
        Signature::NegativeDefinite
    }
}

/// Signature from the eigenvalues of a symmetric matrix.
pub fn signature_from_eigenvalues(g: &[[f64; 4]; 4]) -> Signature {
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    let eig = SymmetricEigen::new(m).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |s, e| s.max(e.abs()));
    let tol = DEGENERACY_TOL * scale.max(f64::MIN_POSITIVE);
    let positive = eig.iter().filter(|e| **e > tol).count();
    let negative = eig.iter().filter(|e| **e < -tol).count();
    match (positive, negative) {
        (4, 0) => Signature::Riemannian,
        (0, 4) => Signature::NegativeDefinite,
        (2, 2) => Signature::Split,
        (p, n) if p + n < 4 => Signature::Degenerate,
        (positive, negative) => Signature::Indefinite { positive, negative },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAtPoint {
    pub at: Point4,
    pub lambda: f64,
    pub gamma: C64,
    pub f: f64,
    pub a: C64,
    pub h: f64,
    pub delta: f64,
    /// Real metric over `(x, y, s, t)`.
    pub g: [[f64; 4]; 4],
    /// Hermitian matrix on `(∂z, ∂w)`.
    pub hermitian: [[C64; 2]; 2],
    /// `ω(∂_A, ∂_B)` for `A, B` in `(∂z, ∂z̄, ∂w, ∂w̄)`.
    pub omega: [[C64; 4]; 4],
    pub signature: Signature,
}

impl MetricAtPoint {
    pub fn det_hermitian(&self) -> C64 {
        let h = &self.hermitian;
        h[0][0] * h[1][1] - h[0][1] * h[1][0]
    }

    /// `ω` over `(x, y, s, t)`.
    pub fn omega_real(&self) -> [[f64; 4]; 4] {
        let basis = COFRAME_REAL;
        std::array::from_fn(|k| {
            std::array::from_fn(|l| {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..4 {
                    for b in 0..4 {
                        acc += self.omega[a][b] * basis[a][k] * basis[b][l];
                    }
                }
                acc.re
            })
        })
    }

    pub fn eval(&self, u: &[f64; 4], v: &[f64; 4]) -> f64 {
        bilinear(&self.g, u, v)
    }

    /// Metric matrix on the adapted frame
    /// `((X + X̄), i(X − X̄), ∂s, ∂t) / √λ`.
    pub fn adapted_frame_matrix(&self, fr: &FrameData) -> [[f64; 4]; 4] {
        let x = fr.x_real();
        let scale = 1.0 / self.lambda.sqrt();
        let frame: [[f64; 4]; 4] = [
            std::array::from_fn(|k| 2.0 * x[k].re * scale),
            std::array::from_fn(|k| -2.0 * x[k].im * scale),
            [0.0, 0.0, scale, 0.0],
            [0.0, 0.0, 0.0, scale],
        ];
        std::array::from_fn(|i| std::array::from_fn(|j| self.eval(&frame[i], &frame[j])))
    }
}

pub fn bilinear(m: &[[f64; 4]; 4], u: &[f64; 4], v: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += m[i][j] * u[i] * v[j];
        }
    }
    acc
}

/// The complex structure: `J∂x = ∂y`, `J∂s = ∂t`.
pub fn apply_j(u: &[f64; 4]) -> [f64; 4] {
    [-u[1], u[0], -u[3], u[2]]
}

/// `ω` on `(∂z, ∂z̄, ∂w, ∂w̄)` from `(iλ/2)(f dz∧dz̄ + a dz∧η̄ + ā η∧dz̄ + h η∧η̄)`.
fn omega_components(lambda: f64, f: f64, a: C64, h: f64, wg: C64) -> [[C64; 4]; 4] {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let dz = [one, zero, zero, zero];
    let dzb = [zero, one, zero, zero];
    let eta = [wg, zero, one, zero];
    let eta_b = [zero, wg.conj(), zero, one];
    let wedge = |x: &[C64; 4], y: &[C64; 4], i: usize, j: usize| x[i] * y[j] - x[j] * y[i];
    let pre = I * lambda / 2.0;
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            pre * (f * wedge(&dz, &dzb, i, j)
                + a * wedge(&dz, &eta_b, i, j)
                + a.conj() * wedge(&eta, &dzb, i, j)
                + h * wedge(&eta, &eta_b, i, j))
        })
    })
}

pub fn assemble(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<MetricAtPoint> {
    let l = local_jets(chart, weights, p)?;
    Ok(assemble_from(&l, p))
}

pub fn assemble_from(l: &LocalJets, p: Point4) -> MetricAtPoint {
    let gj = metric_jets(l);
    let hj = hermitian_jets(&gj);
    let g = gj.map(|row| row.map(|e| e.value.re));
    let (f, a, h) = (l.f.value.re, l.a.value, l.h.value.re);
    let lambda = l.lambda.value.re;
    MetricAtPoint {
        at: p,
        lambda,
        gamma: l.gamma.value,
        f,
        a,
        h,
        delta: f * h - a.norm_sqr(),
        g,
        hermitian: hj.map(|row| row.map(|e| e.value)),
        omega: omega_components(lambda, f, a, h, p.w * l.gamma.value),
        signature: signature_from_weights(f, a, h),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignatureCheck {
    pub criteria: Signature,
    pub eigen: Signature,
}

impl SignatureCheck {
    pub fn agree(&self) -> bool {
        self.criteria == self.eigen
    }
}

pub fn signature(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<SignatureCheck> {
    let m = assemble(chart, weights, p)?;
    Ok(SignatureCheck {
        criteria: m.signature,
        eigen: signature_from_eigenvalues(&m.g),
    })
}

/// `max |ω(u,v) − G(Ju,v)|` and `max |G(Ju,Jv) − G(u,v)|` over coordinate
/// basis vectors (both sides are bilinear).
pub fn compatibility_residual(m: &MetricAtPoint) -> f64 {
    let om = m.omega_real();
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut u = [0.0; 4];
            let mut v = [0.0; 4];
            u[i] = 1.0;
            v[j] = 1.0;
            let ju = apply_j(&u);
            let jv = apply_j(&v);
            worst = worst.max((om[i][j] - m.eval(&ju, &v)).abs());
            worst = worst.max((m.eval(&ju, &jv) - m.eval(&u, &v)).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IsometryReport {
    pub samples: usize,
    /// `max ||φ'|² λ(φ) − λ| / λ`.
    pub base: f64,
    /// `max |a(φ(z)) − a(z)|`.
    pub a_invariance: f64,
    /// `max |Φ*g − g|` relative to `max(1, |g|)`, `Φ(z, w) = (φ(z), φ'(z) w)`.
    pub pullback: f64,
}

/// Tests whether the lift `(z, w) ↦ (φ(z), φ'(z) w)` of a holomorphic map
/// `φ` preserves `g_{f,a,h}`. The base isometry property is checked first.
pub fn isometry_lift_check(
    chart: &ConformalChart,
    weights: &WeightTriple,
    phi: &Expression,
    samples: &[Point4],
) -> Result<IsometryReport> {
    if !phi.classify().is_base_only() {
        return Err(Error::Invalid(format!("map `{}` must depend on z only", phi.source())));
    }
    if !weights.a.class().is_base_only() {
        return Err(Error::Invalid("isometry lift needs a base-only weight a".into()));
    }
    let mut rep = IsometryReport {
        samples: samples.len(),
        ..Default::default()
    };
    let mut jets_at = Vec::with_capacity(samples.len());
    for p in samples {
        let j = phi.eval_with(&Env::from_real(seed_variables(Point4::new(
            p.z,
            C64::new(0.0, 0.0),
        ))))?;
        let d1 = j.wirtinger(Wirtinger::Z);
        let lam = chart.lambda_value(p.z)?;
        let lam_img = chart.lambda_value(j.value)?;
        rep.base = rep.base.max((d1.norm_sqr() * lam_img - lam).abs() / lam);
        jets_at.push(j);
    }
    if rep.base > 1e-9 {
        return Err(Error::NotAnIsometry(rep.base));
    }
    for (p, j) in samples.iter().zip(jets_at) {
        let d1 = j.wirtinger(Wirtinger::Z);
        let d2 = j.wirtinger2(Wirtinger::Z, Wirtinger::Z);
        let image = Point4::new(j.value, d1 * p.w);
        let a0 = weights.a.eval(*p, chart)?.value;
        let a1 = weights.a.eval(image, chart)?.value;
        rep.a_invariance = rep.a_invariance.max((a1 - a0).norm());

        // real Jacobian of Φ; columns are images of ∂x, ∂y, ∂s, ∂t
        let cols: [[C64; 2]; 4] = [
            [j.grad[0], d2 * p.w],
            [j.grad[1], I * d2 * p.w],
            [C64::new(0.0, 0.0), d1],
            [C64::new(0.0, 0.0), I * d1],
        ];
        let jac: [[f64; 4]; 4] = std::array::from_fn(|r| {
            std::array::from_fn(|c| match r {
                0 => cols[c][0].re,
                1 => cols[c][0].im,
                2 => cols[c][1].re,
                _ => cols[c][1].im,
            })
        });
        let g0 = assemble(chart, weights, *p)?.g;
        let g1 = assemble(chart, weights, image)?.g;
        let scale = g0.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
        for a in 0..4 {
            for b in 0..4 {
                let col_a: [f64; 4] = std::array::from_fn(|r| jac[r][a]);
                let col_b: [f64; 4] = std::array::from_fn(|r| jac[r][b]);
                let pulled = bilinear(&g1, &col_a, &col_b);
                rep.pullback = rep.pullback.max((pulled - g0[a][b]).abs() / scale);
            }
        }
    }
    Ok(rep)
}

/// `|det H − λ²Δ| / |λ²Δ|`.
pub fn det_identity_residual(m: &MetricAtPoint) -> f64 {
    let want = m.lambda * m.lambda * m.delta;
    (m.det_hermitian() - want).norm() / want.abs().max(f64::MIN_POSITIVE)
}
