//! Levi-Civita curvature, geodesics and fibre lengths of a 4D metric in
//! real coordinates `(x, y, s, t)`.
//!
//! Index convention: `Γ^a_{bc}` is `christoffel[a][b][c]`,
//! `R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}`
//! is `riemann[a][b][c][d]`, and `Ric_{bd} = R^a_{bad}`.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{Jet2, Point4, C64};
use crate::metric::{local_jets, metric_jets, WeightTriple};
use crate::quad;
use crate::sampling::FibreRange;
use crate::surface::ConformalChart;

/// Points with `|det G|` below this are treated as degenerate.
pub const DEGENERATE_DET: f64 = 1e-10;

type M4 = [[f64; 4]; 4];
type T3 = [[[f64; 4]; 4]; 4];
type T4 = [[[[f64; 4]; 4]; 4]; 4];

#[derive(Debug, Clone)]
pub struct CurvatureAtPoint {
    pub at: Point4,
    pub metric: M4,
    pub christoffel: T3,
    pub riemann: T4,
    pub ricci: M4,
    pub scalar: f64,
}

fn max_abs<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

impl CurvatureAtPoint {
    pub fn max_riemann(&self) -> f64 {
        max_abs(self.riemann.iter().flatten().flatten().flatten())
    }

    pub fn max_ricci(&self) -> f64 {
        max_abs(self.ricci.iter().flatten())
    }

    /// `R_{abcd} = g_{ae} R^e_{bcd}`.
    pub fn riemann_lowered(&self) -> T4 {
        let mut out = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        out[a][b][c][d] = (0..4).map(|e| self.metric[a][e] * self.riemann[e][b][c][d]).sum();
                    }
                }
            }
        }
        out
    }

    /// `max |R^a_{bcd} + R^a_{cdb} + R^a_{dbc}|`.
    pub fn bianchi_defect(&self) -> f64 {
        let r = &self.riemann;
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        m = m.max((r[a][b][c][d] + r[a][c][d][b] + r[a][d][b][c]).abs());
                    }
                }
            }
        }
        m
    }

    /// Largest violation of `R_{abcd} = −R_{bacd} = −R_{abdc}`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let r = self.riemann_lowered();
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        m = m
                            .max((r[a][b][c][d] + r[b][a][c][d]).abs())
                            .max((r[a][b][c][d] + r[a][b][d][c]).abs());
                    }
                }
            }
        }
        m
    }

    pub fn ricci_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                m = m.max((self.ricci[a][b] - self.ricci[b][a]).abs());
            }
        }
        m
    }
}

fn to_matrix(m: &M4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

fn inverse(g: &M4) -> Result<M4> {
    let m = to_matrix(g);
    let det = m.determinant();
    if det.abs() < DEGENERATE_DET || !det.is_finite() {
        return Err(Error::DegenerateMetric(det.abs()));
    }
    let inv = m.try_inverse().ok_or(Error::DegenerateMetric(det.abs()))?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

/// Christoffel symbols and their first derivatives from the metric 2-jet.
fn christoffel_with_derivatives(g: &[[Jet2; 4]; 4]) -> Result<(M4, T3, T4)> {
    let val: M4 = g.map(|row| row.map(|e| e.value.re));
    let d = |e: usize, a: usize, b: usize| g[a][b].grad[e].re;
    let dd = |e: usize, f: usize, a: usize, b: usize| g[a][b].h(e, f).re;
    let inv = inverse(&val)?;

    // first kind Γ_{dbc} and ∂_e Γ_{dbc}
    let mut first = [[[0.0; 4]; 4]; 4];
    let mut dfirst = [[[[0.0; 4]; 4]; 4]; 4];
    for dd_ in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                first[dd_][b][c] = 0.5 * (d(b, dd_, c) + d(c, dd_, b) - d(dd_, b, c));
                for e in 0..4 {
                    dfirst[e][dd_][b][c] = 0.5 * (dd(e, b, dd_, c) + dd(e, c, dd_, b) - dd(e, dd_, b, c));
                }
            }
        }
    }
    // ∂_e g^{ad} = −g^{ap} ∂_e g_{pq} g^{qd}
    let mut dinv = [[[0.0; 4]; 4]; 4];
    for e in 0..4 {
        for a in 0..4 {
            for dd_ in 0..4 {
                let mut acc = 0.0;
                for p in 0..4 {
                    for q in 0..4 {
                        acc += inv[a][p] * d(e, p, q) * inv[q][dd_];
                    }
                }
                dinv[e][a][dd_] = -acc;
            }
        }
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                gamma[a][b][c] = (0..4).map(|k| inv[a][k] * first[k][b][c]).sum();
                for e in 0..4 {
                    dgamma[e][a][b][c] = (0..4)
                        .map(|k| dinv[e][a][k] * first[k][b][c] + inv[a][k] * dfirst[e][k][b][c])
                        .sum();
                }
            }
        }
    }
    Ok((val, gamma, dgamma))
}

pub fn curvature_from_jets(g: &[[Jet2; 4]; 4], at: Point4) -> Result<CurvatureAtPoint> {
    let (metric, gamma, dgamma) = christoffel_with_derivatives(g)?;
    let inv = inverse(&metric)?;
    let mut riemann = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut r = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..4 {
                        r += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    riemann[a][b][c][d] = r;
                }
            }
        }
    }
    let ricci: M4 = std::array::from_fn(|b| std::array::from_fn(|d| (0..4).map(|a| riemann[a][b][a][d]).sum()));
    let mut scalar = 0.0;
    for b in 0..4 {
        for d in 0..4 {
            scalar += inv[b][d] * ricci[b][d];
        }
    }
    Ok(CurvatureAtPoint {
        at,
        metric,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
    })
}

pub fn curvature(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<CurvatureAtPoint> {
    let l = local_jets(chart, weights, p)?;
    curvature_from_jets(&metric_jets(&l), p)
}

fn metric_and_christoffel(chart: &ConformalChart, weights: &WeightTriple, p: Point4) -> Result<(M4, T3)> {
    let l = local_jets(chart, weights, p)?;
    let (g, gamma, _) = christoffel_with_derivatives(&metric_jets(&l))?;
    Ok((g, gamma))
}

fn quadratic(g: &M4, u: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += g[i][j] * u[i] * u[j];
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub position: [f64; 4],
    pub velocity: [f64; 4],
    /// `g(γ̇, γ̇)`.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitReason {
    Completed,
    DomainExit,
    SingularityApproach,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-12,
            atol: 1e-12,
            initial_step: 1e-2,
            min_step: 1e-12,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub exit: ExitReason,
    /// `max |E(t) − E(0)|` over accepted steps.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("a trajectory has its initial state")
    }

    /// Energy drift per unit parameter.
    pub fn drift_rate(&self) -> f64 {
        self.energy_drift / self.last().t.abs().max(1.0)
    }
}

/// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 8];

/// Width of the band in `r²` next to a finite nonzero endpoint that counts
/// as having reached it.
fn guard(endpoint: f64) -> f64 {
    if endpoint.is_finite() && endpoint != 0.0 {
        1e-6 * endpoint.abs()
    } else {
        0.0
    }
}

struct Flow<'a> {
    chart: &'a ConformalChart,
    weights: &'a WeightTriple,
    r2_domain: (f64, f64),
}

impl Flow<'_> {
    fn point(&self, y: &State) -> Point4 {
        Point4::from_real(y[0], y[1], y[2], y[3])
    }

    fn r2(&self, y: &State) -> Result<f64> {
        let p = self.point(y);
        Ok(self.chart.lambda_value(p.z)? * p.w.norm_sqr())
    }

    fn inside(&self, y: &State) -> bool {
        let p = self.point(y);
        if !self.chart.domain().contains(p.z) {
            return false;
        }
        match self.r2(y) {
            Ok(r2) => {
                let (lo, hi) = self.r2_domain;
                r2 > lo + guard(lo) && r2 < hi - guard(hi)
            }
            Err(_) => false,
        }
    }

    fn rhs(&self, y: &State) -> Result<State> {
        let (_, gamma) = metric_and_christoffel(self.chart, self.weights, self.point(y))?;
        let v = [y[4], y[5], y[6], y[7]];
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&v);
        for a in 0..4 {
            let mut acc = 0.0;
            for b in 0..4 {
                for c in 0..4 {
                    acc += gamma[a][b][c] * v[b] * v[c];
                }
            }
            out[4 + a] = -acc;
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite geodesic acceleration".into()));
        }
        Ok(out)
    }

    fn energy(&self, y: &State) -> Result<f64> {
        let l = local_jets(self.chart, self.weights, self.point(y))?;
        let g: M4 = metric_jets(&l).map(|row| row.map(|e| e.value.re));
        Ok(quadratic(&g, &[y[4], y[5], y[6], y[7]]))
    }

    /// One embedded step; `None` when an intermediate stage cannot be
    /// evaluated.
    fn step(&self, y: &State, h: f64) -> Option<(State, f64)> {
        let mut k = [[0.0; 8]; 7];
        for s in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..8 {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            if s > 0 && !self.inside(&ys) {
                return None;
            }
            k[s] = self.rhs(&ys).ok()?;
        }
        let mut y5 = *y;
        let mut err: f64 = 0.0;
        for i in 0..8 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            err = err.max((h * (d5 - d4)).abs() / (1.0 + y[i].abs().max(y5[i].abs())));
        }
        Some((y5, err))
    }
}

/// Integrates the geodesic equation from `init` over `[0, t_end]` while the
/// point stays inside the chart and `r²` stays in `r2_domain`.
pub fn geodesic(
    chart: &ConformalChart,
    weights: &WeightTriple,
    r2_domain: (f64, f64),
    init: Point4,
    velocity: [f64; 4],
    t_end: f64,
    control: StepControl,
) -> Result<Trajectory> {
    let flow = Flow {
        chart,
        weights,
        r2_domain,
    };
    let c = init.coords();
    let mut y: State = [c[0], c[1], c[2], c[3], velocity[0], velocity[1], velocity[2], velocity[3]];
    if !flow.inside(&y) {
        return Err(Error::OutsideChart {
            chart: chart.name().to_string(),
            re: init.z.re,
            im: init.z.im,
        });
    }
    flow.rhs(&y)?;
    let e0 = flow.energy(&y)?;
    let dir = t_end.signum();
    let mut t = 0.0;
    let mut h = control.initial_step.min(t_end.abs());
    let mut states = vec![GeodesicState {
        t,
        position: c,
        velocity,
        energy: e0,
    }];
    let mut drift: f64 = 0.0;
    let mut steps = 0;
    let mut blocked = false;
    let exit = loop {
        if (t_end - t).abs() <= 1e-14 * t_end.abs().max(1.0) {
            break ExitReason::Completed;
        }
        if h < control.min_step {
            let r2 = flow.r2(&y).unwrap_or(f64::NAN);
            let (lo, hi) = r2_domain;
            let near = |e: f64| e.is_finite() && (r2 - e).abs() <= 1e-3 * e.abs().max(1e-3);
            break if blocked || near(lo) || near(hi) {
                ExitReason::DomainExit
            } else {
                ExitReason::SingularityApproach
            };
        }
        steps += 1;
        if steps > control.max_steps {
            break ExitReason::SingularityApproach;
        }
        let h_try = h.min((t_end - t).abs());
        match flow.step(&y, dir * h_try) {
            None => {
                blocked = true;
                h = h_try * 0.25;
            }
            Some((y_new, err)) => {
                let tol = control.atol + control.rtol;
                let ratio = err / tol;
                if ratio <= 1.0 && flow.inside(&y_new) {
                    y = y_new;
                    t += dir * h_try;
                    let e = flow.energy(&y)?;
                    drift = drift.max((e - e0).abs());
                    states.push(GeodesicState {
                        t,
                        position: [y[0], y[1], y[2], y[3]],
                        velocity: [y[4], y[5], y[6], y[7]],
                        energy: e,
                    });
                    blocked = false;
                    let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                    h = h_try * grow;
                } else if !flow.inside(&y_new) {
                    blocked = true;
                    h = h_try * 0.25;
                } else {
                    h = h_try * (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
                }
            }
        }
    };
    Ok(Trajectory {
        states,
        exit,
        energy_drift: drift,
    })
}

fn sqrt_h(chart: &ConformalChart, weights: &WeightTriple, z: C64, r: f64) -> Result<f64> {
    let lambda = chart.lambda_value(z)?;
    let p = Point4::new(z, C64::new(r / lambda.sqrt(), 0.0));
    let h = weights.h.eval(p, chart)?.value;
    if h.re <= 0.0 || h.im.abs() > 1e-9 * h.norm() {
        return Err(Error::Domain(format!("h = {h} at r = {r} is not positive")));
    }
    Ok(h.re.sqrt())
}

/// `∫ √h dr` over `[ra, rb]` along a fibre ray through `z`.
pub fn fibre_length(chart: &ConformalChart, weights: &WeightTriple, z: C64, ra: f64, rb: f64) -> Result<f64> {
    quad::integrate(|r| sqrt_h(chart, weights, z, r), ra, rb, 1e-10, 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    Infinite,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointBehaviour {
    pub side: Side,
    /// The endpoint in `r²` (may be infinite).
    pub r2: f64,
    /// `α` in `√h ∼ C d^α`, with `d` the distance to the endpoint in `r`, or
    /// `r` itself at an infinite endpoint.
    pub exponent: f64,
    /// Largest deviation of `log √h` from the fitted line.
    pub fit_residual: f64,
    pub distance: Distance,
}

const FIT_NODES: usize = 32;
/// Default bound on the log-space deviation from the fitted power law.
pub const FIT_TOLERANCE: f64 = 0.05;

/// Fits the power law of `√h` at one end of the `r²` interval and decides
/// whether the end lies at finite distance.
pub fn endpoint_behaviour(
    chart: &ConformalChart,
    weights: &WeightTriple,
    z: C64,
    r2_domain: (f64, f64),
    side: Side,
) -> Result<EndpointBehaviour> {
    endpoint_behaviour_with(chart, weights, z, r2_domain, side, FIT_TOLERANCE)
}

pub fn endpoint_behaviour_with(
    chart: &ConformalChart,
    weights: &WeightTriple,
    z: C64,
    r2_domain: (f64, f64),
    side: Side,
    fit_tolerance: f64,
) -> Result<EndpointBehaviour> {
    let (lo, hi) = (r2_domain.0.sqrt(), r2_domain.1.sqrt());
    let end = match side {
        Side::Inner => lo,
        Side::Outer => hi,
    };
    let infinite = end.is_infinite();
    let scale = if infinite {
        lo.max(1.0)
    } else if hi.is_finite() {
        hi - lo
    } else {
        end.max(1.0)
    };
    // the last two decades before the endpoint
    let mut xs = Vec::with_capacity(FIT_NODES);
    let mut ys = Vec::with_capacity(FIT_NODES);
    for i in 0..FIT_NODES {
        let u = i as f64 / (FIT_NODES - 1) as f64;
        let (d, r) = if infinite {
            let r = scale * 10f64.powf(2.0 + 2.0 * u);
            (r, r)
        } else {
            let d = scale * 10f64.powf(-4.0 + 2.0 * u);
            (d, if side == Side::Inner { end + d } else { end - d })
        };
        xs.push(d.ln());
        ys.push(sqrt_h(chart, weights, z, r)?.ln());
    }
    let n = FIT_NODES as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let alpha = sxy / sxx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - alpha * (x - mx)).abs())
        .fold(0.0, f64::max);
    if residual > fit_tolerance {
        return Err(Error::ExponentFitUnstable(residual));
    }
    let divergent = if infinite { alpha >= -1.0 } else { alpha <= -1.0 };
    Ok(EndpointBehaviour {
        side,
        r2: match side {
            Side::Inner => r2_domain.0,
            Side::Outer => r2_domain.1,
        },
        exponent: alpha,
        fit_residual: residual,
        distance: if divergent { Distance::Infinite } else { Distance::Finite },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Both ends at infinite distance.
    Complete,
    /// The zero section is infinitely far; the other end is at finite
    /// distance and can be added.
    CompleteAwayFromZeroSection,
    /// Every finite-distance end is a boundary away from the zero section.
    CompleteWithBoundaryAdded,
    /// Some end at finite distance cannot be added as a boundary.
    Incomplete,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub inner: EndpointBehaviour,
    pub outer: EndpointBehaviour,
    pub verdict: Verdict,
}

pub fn completeness(
    chart: &ConformalChart,
    weights: &WeightTriple,
    z: C64,
    r2_domain: (f64, f64),
) -> Result<CompletenessReport> {
    completeness_with(chart, weights, z, r2_domain, FIT_TOLERANCE)
}

pub fn completeness_with(
    chart: &ConformalChart,
    weights: &WeightTriple,
    z: C64,
    r2_domain: (f64, f64),
    fit_tolerance: f64,
) -> Result<CompletenessReport> {
    let inner = endpoint_behaviour_with(chart, weights, z, r2_domain, Side::Inner, fit_tolerance)?;
    let outer = endpoint_behaviour_with(chart, weights, z, r2_domain, Side::Outer, fit_tolerance)?;
    let finite = [inner, outer]
        .into_iter()
        .filter(|e| e.distance == Distance::Finite)
        .collect::<Vec<_>>();
    let verdict = if finite.is_empty() {
        Verdict::Complete
    } else if finite.iter().any(|e| e.r2 == 0.0 || e.r2.is_infinite()) {
        Verdict::Incomplete
    } else if inner.r2 == 0.0 {
        Verdict::CompleteAwayFromZeroSection
    } else {
        Verdict::CompleteWithBoundaryAdded
    };
    Ok(CompletenessReport { inner, outer, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthSample {
    pub r: f64,
    pub sqrt_h: f64,
    pub cumulative: f64,
}

/// `√h` and the running fibre length on `n` nodes spanning the interior of
/// the `r²` interval.
pub fn length_profile(
    chart: &ConformalChart,
    weights: &WeightTriple,
    z: C64,
    r2_domain: (f64, f64),
    n: usize,
) -> Result<Vec<LengthSample>> {
    let (lo, hi) = match FibreRange::interior(r2_domain.0, r2_domain.1, 1e-2) {
        FibreRange::R2 { lo, hi } | FibreRange::R2Log { lo, hi } => (lo.sqrt(), hi.sqrt()),
        FibreRange::Square { .. } => unreachable!("interior ranges are radial"),
    };
    let mut out = Vec::with_capacity(n);
    let mut total = 0.0;
    let mut prev = lo;
    for i in 0..n {
        let r = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        total += fibre_length(chart, weights, z, prev, r)?;
        prev = r;
        out.push(LengthSample {
            r,
            sqrt_h: sqrt_h(chart, weights, z, r)?,
            cumulative: total,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{make_family, FamilyKind, FamilyParams};
    use crate::kahler::flat_example;
    use crate::expr::Expression;
    use crate::sampling::sample_points;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn euclidean_space_is_flat() {
        let k = curvature(&ConformalChart::flat(), &WeightTriple::sasaki(), Point4::from_real(0.1, 0.2, 0.3, 0.4))
            .unwrap();
        assert!(k.max_riemann() < 1e-12);
        assert!(k.christoffel.iter().flatten().flatten().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn flat_example_is_flat() {
        let w = flat_example(&Expression::parse("z^2").unwrap()).unwrap();
        let chart = ConformalChart::flat();
        for p in sample_points(&chart, FibreRange::Square { half_width: 1.0 }, 50, 3, 1e-3) {
            let k = curvature(&chart, &w, p).unwrap();
            assert!(k.max_riemann() < 1e-6, "{}", k.max_riemann());
        }
    }

    #[test]
    fn cy_i_is_flat_and_cy_iii_only_ricci_flat() {
        // f|dz + (ā/f)dw|² + |dw|²/(f r⁴) is a product of two flat planes
        let flat = ConformalChart::flat();
        let fam = make_family(FamilyKind::CyI, &FamilyParams::default(), &flat).unwrap();
        let k = curvature(&flat, &fam.weights, Point4::new(c(0.2, 0.1), c(1.0, 0.0))).unwrap();
        assert!(k.max_riemann() < 1e-10);
        let sphere = ConformalChart::sphere();
        let fam = make_family(FamilyKind::CyIII, &FamilyParams::default(), &sphere).unwrap();
        let k = curvature(&sphere, &fam.weights, Point4::new(c(0.2, 0.1), c(0.3, 0.0))).unwrap();
        assert!(k.max_ricci() < 1e-6);
        assert!(k.max_riemann() > 1e-3);
    }

    #[test]
    fn sphere_sasaki_satisfies_curvature_identities() {
        // The Sasaki metric over the unit sphere: horizontal part has K = 1,
        // so Ricci is nonzero; the identities must still hold.
        let chart = ConformalChart::sphere();
        for p in sample_points(&chart, FibreRange::Square { half_width: 1.0 }, 20, 5, 1e-3) {
            let k = curvature(&chart, &WeightTriple::sasaki(), p).unwrap();
            assert!(k.bianchi_defect() < 1e-8);
            assert!(k.antisymmetry_defect() < 1e-8);
            assert!(k.ricci_asymmetry() < 1e-8);
            let christoffel_sym = (0..4)
                .flat_map(|a| (0..4).flat_map(move |b| (0..4).map(move |cc| (a, b, cc))))
                .map(|(a, b, cc)| (k.christoffel[a][b][cc] - k.christoffel[a][cc][b]).abs())
                .fold(0.0, f64::max);
            assert!(christoffel_sym < 1e-12);
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let w = WeightTriple::constants(1.0, c(1.0, 0.0), 1.0);
        let err = curvature(&ConformalChart::flat(), &w, Point4::from_real(0.0, 0.0, 0.5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric(_)));
    }

    #[test]
    fn straight_lines_in_euclidean_space() {
        let tr = geodesic(
            &ConformalChart::flat(),
            &WeightTriple::sasaki(),
            (0.0, f64::INFINITY),
            Point4::from_real(0.1, 0.0, 0.2, 0.0),
            [1.0, 0.0, 1.0, 0.0],
            5.0,
            StepControl::default(),
        )
        .unwrap();
        assert_eq!(tr.exit, ExitReason::Completed);
        for s in &tr.states {
            let want = [0.1 + s.t, 0.0, 0.2 + s.t, 0.0];
            for i in 0..4 {
                assert!((s.position[i] - want[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sphere_sasaki_energy_is_conserved_and_reversible() {
        let chart = ConformalChart::sphere();
        let w = WeightTriple::sasaki();
        let start = Point4::from_real(0.2, -0.1, 0.3, 0.1);
        let v = [0.1, 0.05, 0.5, 0.3];
        let tr = geodesic(&chart, &w, (0.0, f64::INFINITY), start, v, 10.0, StepControl::default()).unwrap();
        assert_eq!(tr.exit, ExitReason::Completed);
        assert!(tr.energy_drift < 1e-7, "{}", tr.energy_drift);
        let end = tr.last();
        let back = geodesic(
            &chart,
            &w,
            (0.0, f64::INFINITY),
            Point4::from_real(end.position[0], end.position[1], end.position[2], end.position[3]),
            end.velocity.map(|x| -x),
            10.0,
            StepControl::default(),
        )
        .unwrap();
        let b = back.last();
        let s = start.coords();
        for i in 0..4 {
            assert!((b.position[i] - s[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn cy_iii_geodesic_leaves_through_outer_boundary() {
        let chart = ConformalChart::sphere();
        let fam = make_family(
            FamilyKind::CyIII,
            &FamilyParams {
                a: Some(c(1.0, 0.0)),
                c0: Some(0.0),
                f: None,
            },
            &chart,
        )
        .unwrap();
        // λ(0) = 4, so r² = 4 s²; start along the gradient of s
        let start = Point4::from_real(0.0, 0.0, 0.45, 0.0);
        let g = crate::metric::assemble(&chart, &fam.weights, start).unwrap().g;
        let inv = Matrix4::from_fn(|i, j| g[i][j]).try_inverse().unwrap();
        let v = [inv[(0, 2)], inv[(1, 2)], inv[(2, 2)], inv[(3, 2)]];
        let tr = geodesic(&chart, &fam.weights, fam.domain, start, v, 50.0, StepControl::default()).unwrap();
        assert_eq!(tr.exit, ExitReason::DomainExit, "{:?} {}", tr.last(), tr.states.len());
        assert!(tr.last().t < 50.0);
        let p = tr.last().position;
        let r2 = chart.lambda_value(c(p[0], p[1])).unwrap() * (p[2] * p[2] + p[3] * p[3]);
        assert!((r2 - 1.0).abs() < 1e-5, "{r2}");
    }

    #[test]
    fn exponents_match_asymptotics() {
        let cases = [
            (FamilyKind::CyI, -2.0, 0.0),
            (FamilyKind::CyII, -1.5, -0.25),
            (FamilyKind::CyIII, -1.5, -0.25),
            (FamilyKind::CyIV, -0.25, -0.5),
        ];
        for (kind, inner, outer) in cases {
            let chart = kind.default_chart();
            let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
            let rep = completeness(&chart, &fam.weights, c(0.0, 0.0), fam.domain).unwrap();
            assert!((rep.inner.exponent - inner).abs() <= 0.05 * inner.abs().max(1.0), "{kind} inner {}", rep.inner.exponent);
            assert!((rep.outer.exponent - outer).abs() <= 0.05 * outer.abs().max(1.0), "{kind} outer {}", rep.outer.exponent);
        }
    }

    #[test]
    fn completeness_verdicts() {
        let want = [
            (FamilyKind::CyI, Verdict::Complete),
            (FamilyKind::CyII, Verdict::CompleteAwayFromZeroSection),
            (FamilyKind::CyIII, Verdict::CompleteAwayFromZeroSection),
            (FamilyKind::CyIV, Verdict::CompleteWithBoundaryAdded),
        ];
        for (kind, verdict) in want {
            let chart = kind.default_chart();
            let fam = make_family(kind, &FamilyParams::default(), &chart).unwrap();
            let rep = completeness(&chart, &fam.weights, c(0.0, 0.0), fam.domain).unwrap();
            assert_eq!(rep.verdict, verdict, "{kind}");
        }
    }

    #[test]
    fn fibre_length_of_constant_h() {
        let w = WeightTriple::constants(1.0, c(0.0, 0.0), 4.0);
        let l = fibre_length(&ConformalChart::sphere(), &w, c(0.3, 0.0), 0.5, 2.0).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
    }

    #[test]
    fn length_profile_is_monotone() {
        let chart = ConformalChart::sphere();
        let fam = make_family(FamilyKind::CyII, &FamilyParams::default(), &chart).unwrap();
        let prof = length_profile(&chart, &fam.weights, c(0.0, 0.0), fam.domain, 20).unwrap();
        assert_eq!(prof.len(), 20);
        assert!(prof.windows(2).all(|w| w[1].cumulative > w[0].cumulative));
    }
}
