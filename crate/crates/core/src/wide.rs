//! Second-order jets in double-double arithmetic, for sums whose terms
//! cancel far below their own size.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use twofloat::TwoFloat;

use crate::jets::{hess_index, Jet2, C64};

type Wide = Complex<TwoFloat>;

fn widen(c: C64) -> Wide {
    Complex::new(TwoFloat::from(c.re), TwoFloat::from(c.im))
}

fn narrow(c: Wide) -> C64 {
    C64::new(f64::from(c.re), f64::from(c.im))
}

/// [`Jet2`] with every coefficient carried to about 106 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WideJet {
    pub value: Wide,
    pub grad: [Wide; 4],
    pub hess: [Wide; 10],
}

impl WideJet {
    pub fn narrow(&self) -> Jet2 {
        Jet2 {
            value: narrow(self.value),
            grad: self.grad.map(narrow),
            hess: self.hess.map(narrow),
        }
    }

    pub fn scale(&self, c: C64) -> WideJet {
        let c = widen(c);
        WideJet {
            value: self.value * c,
            grad: self.grad.map(|g| g * c),
            hess: self.hess.map(|g| g * c),
        }
    }

    pub fn re(&self) -> WideJet {
        let re = |c: Wide| Complex::new(c.re, TwoFloat::from(0.0));
        WideJet {
            value: re(self.value),
            grad: self.grad.map(re),
            hess: self.hess.map(re),
        }
    }
}

impl From<Jet2> for WideJet {
    fn from(j: Jet2) -> WideJet {
        WideJet {
            value: widen(j.value),
            grad: j.grad.map(widen),
            hess: j.hess.map(widen),
        }
    }
}

impl Add for WideJet {
    type Output = WideJet;
    fn add(self, o: WideJet) -> WideJet {
        WideJet {
            value: self.value + o.value,
            grad: std::array::from_fn(|i| self.grad[i] + o.grad[i]),
            hess: std::array::from_fn(|i| self.hess[i] + o.hess[i]),
        }
    }
}

impl Sub for WideJet {
    type Output = WideJet;
    fn sub(self, o: WideJet) -> WideJet {
        WideJet {
            value: self.value - o.value,
            grad: std::array::from_fn(|i| self.grad[i] - o.grad[i]),
            hess: std::array::from_fn(|i| self.hess[i] - o.hess[i]),
        }
    }
}

impl Mul for WideJet {
    type Output = WideJet;
    fn mul(self, o: WideJet) -> WideJet {
        let (u, v) = (self.value, o.value);
        let mut hess = [widen(C64::new(0.0, 0.0)); 10];
        for i in 0..4 {
            for j in i..4 {
                let k = hess_index(i, j);
                hess[k] = self.hess[k] * v + self.grad[i] * o.grad[j] + self.grad[j] * o.grad[i] + u * o.hess[k];
            }
        }
        WideJet {
            value: u * v,
            grad: std::array::from_fn(|i| self.grad[i] * v + u * o.grad[i]),
            hess,
        }
    }
}
