//! Deterministic max-residual bookkeeping over sample sets.

use serde::Serialize;

use crate::jets::Point4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
    /// Samples that could not be evaluated (degenerate metric, pole).
    pub skipped: usize,
    /// `(x, y, s, t)` of the largest residual.
    pub worst_point: Option<[f64; 4]>,
}

/// Running maximum; on ties the earliest sample wins, so the result only
/// depends on the order in which values are pushed.
#[derive(Debug, Clone)]
pub struct MaxTracker {
    name: String,
    tolerance: f64,
    max: f64,
    worst: Option<Point4>,
    samples: usize,
    skipped: usize,
    poisoned: bool,
}

impl MaxTracker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        MaxTracker {
            name: name.into(),
            tolerance,
            max: 0.0,
            worst: None,
            samples: 0,
            skipped: 0,
            poisoned: false,
        }
    }

    pub fn push(&mut self, p: Point4, value: f64) {
        self.samples += 1;
        if value.is_nan() {
            self.poisoned = true;
            self.worst = Some(p);
            return;
        }
        if value > self.max || self.worst.is_none() {
            if value > self.max {
                self.max = value;
            }
            if !self.poisoned {
                self.worst = Some(p);
            }
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn max(&self) -> f64 {
        if self.poisoned {
            f64::NAN
        } else {
            self.max
        }
    }

    pub fn finish(&self) -> CheckResult {
        let max = self.max();
        CheckResult {
            name: self.name.clone(),
            max_residual: max,
            tolerance: self.tolerance,
            pass: !self.poisoned && self.samples > 0 && max < self.tolerance,
            samples: self.samples,
            skipped: self.skipped,
            worst_point: self.worst.map(|p| p.coords()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::C64;

    #[test]
    fn keeps_first_maximum() {
        let mut t = MaxTracker::new("x", 1.0);
        let p = |x| Point4::new(C64::new(x, 0.0), C64::new(0.0, 0.0));
        t.push(p(0.0), 0.1);
        t.push(p(1.0), 0.5);
        t.push(p(2.0), 0.5);
        let r = t.finish();
        assert_eq!(r.max_residual, 0.5);
        assert_eq!(r.worst_point.unwrap()[0], 1.0);
        assert!(r.pass);
    }

    #[test]
    fn nan_fails() {
        let mut t = MaxTracker::new("x", 1.0);
        t.push(Point4::from_real(0.0, 0.0, 0.0, 0.0), f64::NAN);
        assert!(!t.finish().pass);
    }
}
