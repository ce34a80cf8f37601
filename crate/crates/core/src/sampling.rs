//! Seeded low-discrepancy sampling.
//!
//! Points come from a Halton sequence with a random Cranley–Patterson
//! shift drawn from a ChaCha generator, so the seed fully determines every
//! sample while coverage stays uniform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jets::{Point4, C64};
use crate::surface::ConformalChart;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

#[derive(Debug, Clone)]
pub struct Sampler {
    shift: Vec<f64>,
}

impl Sampler {
    pub fn new(seed: u64, dims: usize) -> Self {
        assert!(dims <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Sampler {
            shift: (0..dims).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    pub fn dims(&self) -> usize {
        self.shift.len()
    }

    /// Sample number `i`, each coordinate in `[0, 1)`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, b)| (radical_inverse(i as u64 + 1, b) + s).fract())
            .collect()
    }
}

/// How the fibre coordinate `w` is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FibreRange {
    /// `w` uniform in the square `|Re w|, |Im w| ≤ half_width`.
    Square { half_width: f64 },
    /// `r² = λ|w|²` uniform in `[lo, hi]`, argument of `w` uniform.
    R2 { lo: f64, hi: f64 },
    /// As `R2` but log-uniform in `r²`.
    R2Log { lo: f64, hi: f64 },
}

impl FibreRange {
    /// Interior sampling interval for an `r²` domain `(lo, hi)`, keeping
    /// `margin` away from finite endpoints. Half-infinite or unbounded
    /// intervals are sampled log-uniformly up to `10 · max(1, lo)`, and
    /// an inner endpoint at 0 is replaced by `0.1` when the upper end is
    /// infinite.
    pub fn interior(lo: f64, hi: f64, margin: f64) -> FibreRange {
        if hi.is_infinite() {
            let a = if lo <= 0.0 { 0.1 } else { lo + margin };
            FibreRange::R2Log {
                lo: a,
                hi: 10.0 * a.max(1.0),
            }
        } else {
            FibreRange::R2 {
                lo: lo + margin,
                hi: hi - margin,
            }
        }
    }
}

/// `n` seeded points of `T_U` over the chart's sampling region.
pub fn sample_points(
    chart: &ConformalChart,
    fibre: FibreRange,
    n: usize,
    seed: u64,
    margin: f64,
) -> Vec<Point4> {
    let sampler = Sampler::new(seed, 4);
    (0..n)
        .map(|i| {
            let u = sampler.point(i);
            let z = chart.domain().sample([u[0], u[1]], margin);
            let w = match fibre {
                FibreRange::Square { half_width } => C64::new(
                    half_width * (2.0 * u[2] - 1.0),
                    half_width * (2.0 * u[3] - 1.0),
                ),
                FibreRange::R2 { lo, hi } => radial_w(chart, z, lo + (hi - lo) * u[2], u[3]),
                FibreRange::R2Log { lo, hi } => {
                    let r2 = (lo.ln() + (hi.ln() - lo.ln()) * u[2]).exp();
                    radial_w(chart, z, r2, u[3])
                }
            };
            Point4::new(z, w)
        })
        .collect()
}

fn radial_w(chart: &ConformalChart, z: C64, r2: f64, u: f64) -> C64 {
    let lambda = chart.lambda_value(z).unwrap_or(1.0);
    C64::from_polar((r2 / lambda).sqrt(), std::f64::consts::TAU * u)
}
