//! Truncated Taylor jets in the four real coordinates `(x, y, s, t)` of the
//! tangent manifold, where `z = x + iy` is the base coordinate and
//! `w = s + it` the fibre coordinate.
//!
//! Derivatives are carried with respect to the real coordinates and the
//! Wirtinger combinations `∂z = ½(∂x − i∂y)`, `∂w = ½(∂s − i∂t)` (and their
//! conjugates) are formed on demand. This keeps non-holomorphic dependence
//! (on `zbar`, `wbar`) free of bookkeeping.
//!
//! Three orders are provided:
//!
//! * [`Jet1`]: value and gradient.
//! * [`Jet2`]: value, gradient and Hessian (upper triangle, 10 entries).
//! * [`Jet3`]: adds the symmetric third-derivative tensor. Only the conformal
//!   factor is ever evaluated at this order, so that `Γ = ∂z log λ` can be
//!   produced as a [`Jet2`].
//!
//! All three implement [`Scalar`], so expression evaluation is written once.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// A point `(z, w)` of `T_U = U × ℂ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point4 {
    pub z: C64,
    pub w: C64,
}

impl Point4 {
    pub fn new(z: C64, w: C64) -> Self {
        Self { z, w }
    }

    pub fn from_real(x: f64, y: f64, s: f64, t: f64) -> Self {
        Self {
            z: C64::new(x, y),
            w: C64::new(s, t),
        }
    }

    /// Real coordinates in the fixed order `(x, y, s, t)`.
    pub fn coords(&self) -> [f64; 4] {
        [self.z.re, self.z.im, self.w.re, self.w.im]
    }

    pub fn with_coord(mut self, index: usize, value: f64) -> Self {
        match index {
            0 => self.z.re = value,
            1 => self.z.im = value,
            2 => self.w.re = value,
            3 => self.w.im = value,
            _ => panic!("coordinate index {index} out of range"),
        }
        self
    }

    pub fn offset(self, index: usize, delta: f64) -> Self {
        let c = self.coords()[index];
        self.with_coord(index, c + delta)
    }
}

/// The four complex (Wirtinger) directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wirtinger {
    Z,
    Zbar,
    W,
    Wbar,
}

impl Wirtinger {
    pub const ALL: [Wirtinger; 4] = [Wirtinger::Z, Wirtinger::Zbar, Wirtinger::W, Wirtinger::Wbar];

    /// Coefficients of the Wirtinger operator on `(∂x, ∂y, ∂s, ∂t)`.
    pub fn coefficients(self) -> [C64; 4] {
        let h = C64::new(0.5, 0.0);
        let hi = C64::new(0.0, 0.5);
        match self {
            Wirtinger::Z => [h, -hi, ZERO, ZERO],
            Wirtinger::Zbar => [h, hi, ZERO, ZERO],
            Wirtinger::W => [ZERO, ZERO, h, -hi],
            Wirtinger::Wbar => [ZERO, ZERO, h, hi],
        }
    }

    pub fn conj(self) -> Self {
        match self {
            Wirtinger::Z => Wirtinger::Zbar,
            Wirtinger::Zbar => Wirtinger::Z,
            Wirtinger::W => Wirtinger::Wbar,
            Wirtinger::Wbar => Wirtinger::W,
        }
    }
}

/// Arithmetic shared by plain complex numbers and the jet types.
///
/// `compose` applies a holomorphic univariate function given its value and
/// first three derivatives at `self.value()`; each type keeps as many as its
/// order needs.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn constant(c: C64) -> Self;
    fn value(&self) -> C64;
    fn compose(&self, derivs: [C64; 4]) -> Self;
    fn conj(&self) -> Self;
    fn scale(&self, c: C64) -> Self;
}

impl Scalar for C64 {
    fn constant(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn compose(&self, derivs: [C64; 4]) -> Self {
        derivs[0]
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn scale(&self, c: C64) -> Self {
        self * c
    }
}

pub fn recip<S: Scalar>(u: S) -> Result<S> {
    let v = u.value();
    if v == ZERO || !v.is_finite() {
        return Err(Error::Pole(format!("1/({v})")));
    }
    let r = v.inv();
    let r2 = r * r;
    Ok(u.compose([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]))
}

pub fn div<S: Scalar>(a: S, b: S) -> Result<S> {
    Ok(a * recip(b)?)
}

pub fn exp<S: Scalar>(u: S) -> S {
    let e = u.value().exp();
    u.compose([e, e, e, e])
}

fn on_branch_cut(v: C64) -> bool {
    v.im == 0.0 && v.re < 0.0
}

/// Principal logarithm; rejects zero and the negative real axis.
pub fn ln<S: Scalar>(u: S) -> Result<S> {
    let v = u.value();
    if v == ZERO || on_branch_cut(v) || !v.is_finite() {
        return Err(Error::Domain(format!("log({v})")));
    }
    let r = v.inv();
    Ok(u.compose([v.ln(), r, -r * r, 2.0 * r * r * r]))
}

/// Principal square root (nonnegative real part, cut on the negative reals).
pub fn sqrt<S: Scalar>(u: S) -> Result<S> {
    let v = u.value();
    if v == ZERO || on_branch_cut(v) || !v.is_finite() {
        return Err(Error::Domain(format!("sqrt({v})")));
    }
    let s = v.sqrt();
    let d1 = 0.5 / s;
    let d2 = -0.25 / (s * v);
    let d3 = 0.375 / (s * v * v);
    Ok(u.compose([s, d1, d2, d3]))
}

pub fn powi<S: Scalar>(u: S, n: i32) -> Result<S> {
    if n == 0 {
        return Ok(S::constant(ONE));
    }
    if n < 0 {
        return recip(powi(u, -n)?);
    }
    let v = u.value();
    let nf = n as f64;
    let coeff = |k: i32| -> C64 {
        // n (n-1) ... (n-k+1) v^(n-k), zero once the falling factorial vanishes
        let mut c = 1.0;
        for j in 0..k {
            c *= nf - j as f64;
        }
        if c == 0.0 {
            ZERO
        } else {
            c * v.powi(n - k)
        }
    };
    Ok(u.compose([coeff(0), coeff(1), coeff(2), coeff(3)]))
}

pub fn abs2<S: Scalar>(u: S) -> S {
    u * u.conj()
}

// ---------------------------------------------------------------------------
// Jet1
// ---------------------------------------------------------------------------

/// Value and gradient with respect to `(x, y, s, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    pub value: C64,
    pub grad: [C64; 4],
}

impl Jet1 {
    pub fn constant(value: C64) -> Self {
        Self {
            value,
            grad: [ZERO; 4],
        }
    }

    pub fn wirtinger(&self, which: Wirtinger) -> C64 {
        let c = which.coefficients();
        (0..4).map(|i| c[i] * self.grad[i]).sum()
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(self, o: Jet1) -> Jet1 {
        Jet1 {
            value: self.value + o.value,
            grad: std::array::from_fn(|i| self.grad[i] + o.grad[i]),
        }
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(self, o: Jet1) -> Jet1 {
        Jet1 {
            value: self.value - o.value,
            grad: std::array::from_fn(|i| self.grad[i] - o.grad[i]),
        }
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        Jet1 {
            value: -self.value,
            grad: self.grad.map(|g| -g),
        }
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            value: self.value * o.value,
            grad: std::array::from_fn(|i| self.grad[i] * o.value + self.value * o.grad[i]),
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, o: Jet1) -> Jet1 {
        let q = self.value / o.value;
        Jet1 {
            value: q,
            grad: std::array::from_fn(|i| (self.grad[i] - q * o.grad[i]) / o.value),
        }
    }
}

impl Scalar for Jet1 {
    fn constant(c: C64) -> Self {
        Jet1::constant(c)
    }
    fn value(&self) -> C64 {
        self.value
    }
    fn compose(&self, d: [C64; 4]) -> Self {
        Jet1 {
            value: d[0],
            grad: self.grad.map(|g| d[1] * g),
        }
    }
    fn conj(&self) -> Self {
        Jet1 {
            value: self.value.conj(),
            grad: self.grad.map(|g| g.conj()),
        }
    }
    fn scale(&self, c: C64) -> Self {
        Jet1 {
            value: self.value * c,
            grad: self.grad.map(|g| g * c),
        }
    }
}

// ---------------------------------------------------------------------------
// Jet2
// ---------------------------------------------------------------------------

/// Index of `(i, j)` in the packed upper triangle of a symmetric 4×4 matrix.
#[inline]
pub const fn hess_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (7 - i) / 2 + j
}

/// Value, gradient and Hessian with respect to `(x, y, s, t)`.
///
/// The Hessian is stored as the packed upper triangle, so `(i, j)` and
/// `(j, i)` address the same slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: C64,
    pub grad: [C64; 4],
    pub hess: [C64; 10],
}

impl Jet2 {
    pub fn constant(value: C64) -> Self {
        Self {
            value,
            grad: [ZERO; 4],
            hess: [ZERO; 10],
        }
    }

    pub fn real(value: f64) -> Self {
        Self::constant(C64::new(value, 0.0))
    }

    /// Independent variable number `index` with the given value.
    pub fn variable(index: usize, value: C64) -> Self {
        let mut j = Self::constant(value);
        j.grad[index] = ONE;
        j
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> C64 {
        self.hess[hess_index(i, j)]
    }

    /// First Wirtinger derivative.
    pub fn wirtinger(&self, which: Wirtinger) -> C64 {
        let c = which.coefficients();
        (0..4).map(|i| c[i] * self.grad[i]).sum()
    }

    /// Second Wirtinger derivative `∂a ∂b`.
    pub fn wirtinger2(&self, a: Wirtinger, b: Wirtinger) -> C64 {
        let ca = a.coefficients();
        let cb = b.coefficients();
        let mut acc = ZERO;
        for i in 0..4 {
            if ca[i] == ZERO {
                continue;
            }
            for j in 0..4 {
                if cb[j] != ZERO {
                    acc += ca[i] * cb[j] * self.h(i, j);
                }
            }
        }
        acc
    }

    /// The Wirtinger derivative as a first-order jet (its own gradient comes
    /// from the Hessian).
    pub fn wirtinger_jet(&self, which: Wirtinger) -> Jet1 {
        let c = which.coefficients();
        Jet1 {
            value: self.wirtinger(which),
            grad: std::array::from_fn(|k| (0..4).map(|i| c[i] * self.h(i, k)).sum()),
        }
    }

    /// Drops the Hessian.
    pub fn to_jet1(&self) -> Jet1 {
        Jet1 {
            value: self.value,
            grad: self.grad,
        }
    }

    pub fn re(&self) -> Jet2 {
        Jet2 {
            value: C64::new(self.value.re, 0.0),
            grad: self.grad.map(|g| C64::new(g.re, 0.0)),
            hess: self.hess.map(|g| C64::new(g.re, 0.0)),
        }
    }

    /// Largest imaginary part over value and all derivatives.
    pub fn max_imag(&self) -> f64 {
        std::iter::once(self.value)
            .chain(self.grad)
            .chain(self.hess)
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn hessian_matrix(&self) -> [[C64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.h(i, j)))
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            grad: std::array::from_fn(|i| self.grad[i] + o.grad[i]),
            hess: std::array::from_fn(|i| self.hess[i] + o.hess[i]),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            grad: std::array::from_fn(|i| self.grad[i] - o.grad[i]),
            hess: std::array::from_fn(|i| self.hess[i] - o.hess[i]),
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            hess: self.hess.map(|g| -g),
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let (u, v) = (self.value, o.value);
        let mut hess = [ZERO; 10];
        for i in 0..4 {
            for j in i..4 {
                let k = hess_index(i, j);
                hess[k] = self.hess[k] * v
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i]
                    + u * o.hess[k];
            }
        }
        Jet2 {
            value: u * v,
            grad: std::array::from_fn(|i| self.grad[i] * v + u * o.grad[i]),
            hess,
        }
    }
}

impl Mul<C64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: C64) -> Jet2 {
        self.scale(c)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        self.scale(C64::new(c, 0.0))
    }
}

impl Add<C64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, c: C64) -> Jet2 {
        self.value += c;
        self
    }
}

impl Scalar for Jet2 {
    fn constant(c: C64) -> Self {
        Jet2::constant(c)
    }
    fn value(&self) -> C64 {
        self.value
    }
    fn compose(&self, d: [C64; 4]) -> Self {
        let mut hess = [ZERO; 10];
        for i in 0..4 {
            for j in i..4 {
                let k = hess_index(i, j);
                hess[k] = d[1] * self.hess[k] + d[2] * self.grad[i] * self.grad[j];
            }
        }
        Jet2 {
            value: d[0],
            grad: self.grad.map(|g| d[1] * g),
            hess,
        }
    }
    fn conj(&self) -> Self {
        Jet2 {
            value: self.value.conj(),
            grad: self.grad.map(|g| g.conj()),
            hess: self.hess.map(|g| g.conj()),
        }
    }
    fn scale(&self, c: C64) -> Self {
        Jet2 {
            value: self.value * c,
            grad: self.grad.map(|g| g * c),
            hess: self.hess.map(|g| g * c),
        }
    }
}

/// The coordinates `x, y, s, t` of `p` as independent [`Jet2`] variables.
pub fn seed_variables(p: Point4) -> [Jet2; 4] {
    let c = p.coords();
    std::array::from_fn(|i| Jet2::variable(i, C64::new(c[i], 0.0)))
}

// ---------------------------------------------------------------------------
// Jet3
// ---------------------------------------------------------------------------

/// Third-order jet with full (redundant) symmetric tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    pub value: C64,
    pub grad: [C64; 4],
    pub hess: [[C64; 4]; 4],
    pub third: [[[C64; 4]; 4]; 4],
}

impl Jet3 {
    pub fn constant(value: C64) -> Self {
        Self {
            value,
            grad: [ZERO; 4],
            hess: [[ZERO; 4]; 4],
            third: [[[ZERO; 4]; 4]; 4],
        }
    }

    pub fn variable(index: usize, value: C64) -> Self {
        let mut j = Self::constant(value);
        j.grad[index] = ONE;
        j
    }

    pub fn truncate(&self) -> Jet2 {
        let mut hess = [ZERO; 10];
        for i in 0..4 {
            for j in i..4 {
                hess[hess_index(i, j)] = self.hess[i][j];
            }
        }
        Jet2 {
            value: self.value,
            grad: self.grad,
            hess,
        }
    }

    /// The Wirtinger derivative as a second-order jet.
    pub fn wirtinger_jet(&self, which: Wirtinger) -> Jet2 {
        let c = which.coefficients();
        let mut hess = [ZERO; 10];
        for k in 0..4 {
            for l in k..4 {
                hess[hess_index(k, l)] = (0..4).map(|i| c[i] * self.third[i][k][l]).sum();
            }
        }
        Jet2 {
            value: (0..4).map(|i| c[i] * self.grad[i]).sum(),
            grad: std::array::from_fn(|k| (0..4).map(|i| c[i] * self.hess[i][k]).sum()),
            hess,
        }
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        let mut r = self;
        r.value += o.value;
        for i in 0..4 {
            r.grad[i] += o.grad[i];
            for j in 0..4 {
                r.hess[i][j] += o.hess[i][j];
                for k in 0..4 {
                    r.third[i][j][k] += o.third[i][j][k];
                }
            }
        }
        r
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self + (-o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-ONE)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        let (u, v) = (self, o);
        let mut r = Jet3::constant(u.value * v.value);
        for i in 0..4 {
            r.grad[i] = u.grad[i] * v.value + u.value * v.grad[i];
            for j in 0..4 {
                r.hess[i][j] = u.hess[i][j] * v.value
                    + u.grad[i] * v.grad[j]
                    + u.grad[j] * v.grad[i]
                    + u.value * v.hess[i][j];
                for k in 0..4 {
                    r.third[i][j][k] = u.third[i][j][k] * v.value
                        + u.hess[i][j] * v.grad[k]
                        + u.hess[i][k] * v.grad[j]
                        + u.hess[j][k] * v.grad[i]
                        + u.grad[i] * v.hess[j][k]
                        + u.grad[j] * v.hess[i][k]
                        + u.grad[k] * v.hess[i][j]
                        + u.value * v.third[i][j][k];
                }
            }
        }
        r
    }
}

impl Scalar for Jet3 {
    fn constant(c: C64) -> Self {
        Jet3::constant(c)
    }
    fn value(&self) -> C64 {
        self.value
    }
    fn compose(&self, d: [C64; 4]) -> Self {
        let u = self;
        let mut r = Jet3::constant(d[0]);
        for i in 0..4 {
            r.grad[i] = d[1] * u.grad[i];
            for j in 0..4 {
                r.hess[i][j] = d[1] * u.hess[i][j] + d[2] * u.grad[i] * u.grad[j];
                for k in 0..4 {
                    r.third[i][j][k] = d[1] * u.third[i][j][k]
                        + d[2]
                            * (u.hess[i][j] * u.grad[k]
                                + u.hess[i][k] * u.grad[j]
                                + u.hess[j][k] * u.grad[i])
                        + d[3] * u.grad[i] * u.grad[j] * u.grad[k];
                }
            }
        }
        r
    }
    fn conj(&self) -> Self {
        let mut r = *self;
        r.value = r.value.conj();
        for i in 0..4 {
            r.grad[i] = r.grad[i].conj();
            for j in 0..4 {
                r.hess[i][j] = r.hess[i][j].conj();
                for k in 0..4 {
                    r.third[i][j][k] = r.third[i][j][k].conj();
                }
            }
        }
        r
    }
    fn scale(&self, c: C64) -> Self {
        let mut r = *self;
        r.value *= c;
        for i in 0..4 {
            r.grad[i] *= c;
            for j in 0..4 {
                r.hess[i][j] *= c;
                for k in 0..4 {
                    r.third[i][j][k] *= c;
                }
            }
        }
        r
    }
}

// ---------------------------------------------------------------------------
// Finite-difference cross-check
// ---------------------------------------------------------------------------

const FD_THRESHOLD: f64 = 1e-6;

struct FdDerivatives {
    grad: [C64; 4],
    hess: [[C64; 4]; 4],
}

/// Gradient from central differences of the value, Hessian from central
/// differences of the jet's own gradient. Differencing the gradient keeps
/// the round-off at `ε/h` instead of `ε/h²`, so small steps stay usable.
fn central_differences<F>(f: &F, p: Point4, h: f64) -> Result<FdDerivatives>
where
    F: Fn(Point4) -> Result<Jet2>,
{
    let eval = |q: Point4| f(q).map_err(|e| Error::Stencil(Box::new(e)));
    let mut grad = [ZERO; 4];
    let mut hess = [[ZERO; 4]; 4];
    for i in 0..4 {
        let plus = eval(p.offset(i, h))?;
        let minus = eval(p.offset(i, -h))?;
        grad[i] = (plus.value - minus.value) / (2.0 * h);
        for j in 0..4 {
            hess[j][i] = (plus.grad[j] - minus.grad[j]) / (2.0 * h);
        }
    }
    Ok(FdDerivatives { grad, hess })
}

fn deviation(jet: &Jet2, fd: &FdDerivatives) -> f64 {
    let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(b.norm()).max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        worst = worst.max(rel(jet.grad[i], fd.grad[i]));
        for j in 0..4 {
            worst = worst.max(rel(jet.h(i, j), fd.hess[i][j]));
        }
    }
    worst
}

/// Maximum relative deviation between the jet derivatives of `f` at `p` and
/// central finite differences with the given step.
///
/// When the plain stencil exceeds `1e-6`, one Richardson extrapolation
/// (steps `h` and `h/2`) is tried and the better of the two is reported.
/// Any evaluation failure inside the stencil is returned as
/// [`Error::Stencil`].
pub fn fd_crosscheck<F>(f: F, p: Point4, step: f64) -> Result<f64>
where
    F: Fn(Point4) -> Result<Jet2>,
{
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Invalid(format!("finite-difference step {step} must be positive")));
    }
    let jet = f(p).map_err(|e| Error::Stencil(Box::new(e)))?;
    let coarse = central_differences(&f, p, step)?;
    let dev = deviation(&jet, &coarse);
    if dev <= FD_THRESHOLD {
        return Ok(dev);
    }
    let fine = central_differences(&f, p, step / 2.0)?;
    let extrapolated = FdDerivatives {
        grad: std::array::from_fn(|i| (4.0 * fine.grad[i] - coarse.grad[i]) / 3.0),
        hess: std::array::from_fn(|i| {
            std::array::from_fn(|j| (4.0 * fine.hess[i][j] - coarse.hess[i][j]) / 3.0)
        }),
    };
    Ok(dev.min(deviation(&jet, &extrapolated)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn seeded_variable_has_unit_gradient() {
        let p = Point4::new(C64::new(1.0, 2.0), ZERO);
        let [x, y, s, t] = seed_variables(p);
        assert_eq!(x.value, C64::new(1.0, 0.0));
        assert_eq!(x.grad, [ONE, ZERO, ZERO, ZERO]);
        assert!(x.hess.iter().all(|h| *h == ZERO));
        assert_eq!(y.value, C64::new(2.0, 0.0));
        assert_eq!(s.grad[2], ONE);
        assert_eq!(t.grad[3], ONE);
    }

    #[test]
    fn product_xy_has_unit_mixed_partial() {
        let [x, y, _, _] = seed_variables(Point4::new(ZERO, ZERO));
        let xy = x * y;
        assert_eq!(xy.value, ZERO);
        assert_eq!(xy.grad, [ZERO; 4]);
        assert_eq!(xy.h(0, 1), ONE);
        assert_eq!(xy.h(1, 0), ONE);
        assert_eq!(xy.h(0, 0), ZERO);
    }

    #[test]
    fn x_squared_times_s_mixed_partial_matches_fd() {
        // oracle: central difference of (x^2) s with step 1e-4 at (1, 0, 1, 0)
        let g = |x: f64, s: f64| x * x * s;
        let h = 1e-4;
        let fd = (g(1.0 + h, 1.0 + h) - g(1.0 + h, 1.0 - h) - g(1.0 - h, 1.0 + h)
            + g(1.0 - h, 1.0 - h))
            / (4.0 * h * h);
        assert!((fd - 2.0).abs() < 1e-6);
        let [x, _, s, _] = seed_variables(Point4::from_real(1.0, 0.0, 1.0, 0.0));
        let j = x * x * s;
        assert!(close(j.h(0, 2), C64::new(fd, 0.0), 1e-6));
        assert_eq!(j.h(0, 2), C64::new(2.0, 0.0));
    }

    #[test]
    fn wirtinger_of_holomorphic_coordinate() {
        let [x, y, _, _] = seed_variables(Point4::new(C64::new(0.3, -0.7), ZERO));
        let z = x + y * I.into_jet();
        assert!(close(z.wirtinger(Wirtinger::Z), ONE, 0.0));
        assert!(close(z.wirtinger(Wirtinger::Zbar), ZERO, 0.0));
    }

    #[test]
    fn wirtinger_of_abs2_is_conjugate() {
        let [x, y, _, _] = seed_variables(Point4::new(C64::new(2.0, 1.0), ZERO));
        let z = x + y * I.into_jet();
        let m = abs2(z);
        assert!(close(m.wirtinger(Wirtinger::Z), C64::new(2.0, -1.0), 1e-15));
        assert!(close(m.wirtinger2(Wirtinger::Z, Wirtinger::Zbar), ONE, 1e-15));
    }

    #[test]
    fn sphere_log_lambda_wirtinger() {
        // ∂z log λ for λ = 4/(1+|z|^2)^2 is -2 zbar/(1+|z|^2), = -1 at z = 1
        let [x, y, _, _] = seed_variables(Point4::new(ONE, ZERO));
        let z = x + y * I.into_jet();
        let lam = div(Jet2::real(4.0), powi(Jet2::real(1.0) + abs2(z), 2).unwrap()).unwrap();
        let g = lam.wirtinger(Wirtinger::Z) / lam.value;
        assert!(close(g, -ONE, 1e-14));
    }

    #[test]
    fn hessian_index_is_symmetric_and_packed() {
        let mut seen = [false; 10];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(hess_index(i, j), hess_index(j, i));
                seen[hess_index(i, j)] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn jet3_truncation_and_lowering_agree_with_jet2() {
        let p = Point4::from_real(0.4, -0.3, 0.0, 0.0);
        let j3 = {
            let x = Jet3::variable(0, C64::new(0.4, 0.0));
            let y = Jet3::variable(1, C64::new(-0.3, 0.0));
            let z = x + y.scale(I);
            recip(Jet3::constant(ONE) + abs2(z)).unwrap()
        };
        let j2 = {
            let [x, y, _, _] = seed_variables(p);
            let z = x + y.scale(I);
            recip(Jet2::real(1.0) + abs2(z)).unwrap()
        };
        let t = j3.truncate();
        assert!(close(t.value, j2.value, 1e-15));
        for k in 0..10 {
            assert!(close(t.hess[k], j2.hess[k], 1e-14));
        }
        // lowering: ∂z of the Jet3 must equal the Jet2 Wirtinger jet on overlap
        let low = j3.wirtinger_jet(Wirtinger::Z);
        let w1 = j2.wirtinger_jet(Wirtinger::Z);
        assert!(close(low.value, w1.value, 1e-15));
        for k in 0..4 {
            assert!(close(low.grad[k], w1.grad[k], 1e-14));
        }
    }

    #[test]
    fn fd_crosscheck_constant_is_zero() {
        let d = fd_crosscheck(|_| Ok(Jet2::real(7.0)), Point4::from_real(1.0, 2.0, 3.0, 4.0), 1e-4)
            .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn fd_crosscheck_exp_of_polynomial() {
        let f = |p: Point4| {
            let [x, y, s, t] = seed_variables(p);
            Ok(exp(x * y.scale(C64::new(0.3, 0.0)) + s * s.scale(C64::new(-0.2, 0.0)) + t))
        };
        let d = fd_crosscheck(f, Point4::from_real(0.2, -0.4, 0.5, 0.1), 1e-5).unwrap();
        assert!(d < 1e-7, "deviation {d}");
    }

    #[test]
    fn fd_crosscheck_reports_pole_in_stencil() {
        let f = |p: Point4| {
            let [x, _, _, _] = seed_variables(p);
            recip(x)
        };
        let err = fd_crosscheck(f, Point4::from_real(0.0, 1.0, 0.0, 0.0), 1e-4).unwrap_err();
        assert!(matches!(err, Error::Stencil(_)));
    }

    #[test]
    fn log_and_sqrt_reject_branch_cut() {
        assert!(matches!(ln(C64::new(-1.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(sqrt(C64::new(-4.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(sqrt(ZERO), Err(Error::Domain(_))));
        assert!(close(sqrt(C64::new(4.0, 0.0)).unwrap(), C64::new(2.0, 0.0), 0.0));
    }

    trait IntoJet {
        fn into_jet(self) -> Jet2;
    }
    impl IntoJet for C64 {
        fn into_jet(self) -> Jet2 {
            Jet2::constant(self)
        }
    }
}
