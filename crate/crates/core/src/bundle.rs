//! The tangent manifold over a chart: the vertical form `η = wΓ dz + dw`,
//! the horizontal generator `X = ∂z − wΓ ∂w`, `r² = λ|w|²`, and the
//! covariant derivative `∇*` (base connection on horizontal and vertical
//! parts).
//!
//! One-forms in the complex coframe are stored as coefficient arrays over
//! `(dz, dz̄, dw, dw̄)`; in real coordinates over `(dx, dy, ds, dt)`.

use crate::error::Result;
use crate::jets::{seed_variables, Jet2, Point4, Scalar, Wirtinger, C64, I};
use crate::surface::{BaseJets, ConformalChart};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `dz`, `dz̄`, `dw`, `dw̄` as rows over `(dx, dy, ds, dt)`.
pub const COFRAME_REAL: [[C64; 4]; 4] = [
    [ONE, I, ZERO, ZERO],
    [ONE, C64::new(0.0, -1.0), ZERO, ZERO],
    [ZERO, ZERO, ONE, I],
    [ZERO, ZERO, ONE, C64::new(0.0, -1.0)],
];

/// `∂z`, `∂z̄`, `∂w`, `∂w̄` as vectors over `(∂x, ∂y, ∂s, ∂t)`.
pub fn coordinate_vector(which: Wirtinger) -> [C64; 4] {
    which.coefficients()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameData {
    pub at: Point4,
    pub lambda: f64,
    pub gamma: C64,
    /// Coefficient of `dz` in `η`, i.e. `wΓ`.
    pub eta_dz_coeff: C64,
    /// Coefficient of `∂w` in `X`, i.e. `−wΓ`.
    pub x_vertical_coeff: C64,
}

impl FrameData {
    /// `η` over `(dz, dz̄, dw, dw̄)`.
    pub fn eta(&self) -> [C64; 4] {
        [self.eta_dz_coeff, ZERO, ONE, ZERO]
    }

    /// `η` over `(dx, dy, ds, dt)`.
    pub fn eta_real(&self) -> [C64; 4] {
        let c = self.eta_dz_coeff;
        [c, c * I, ONE, I]
    }

    /// `X` over `(∂x, ∂y, ∂s, ∂t)`.
    pub fn x_real(&self) -> [C64; 4] {
        let dz = coordinate_vector(Wirtinger::Z);
        let dw = coordinate_vector(Wirtinger::W);
        std::array::from_fn(|k| dz[k] + self.x_vertical_coeff * dw[k])
    }

    /// `∂w` over `(∂x, ∂y, ∂s, ∂t)`.
    pub fn vertical_real(&self) -> [C64; 4] {
        coordinate_vector(Wirtinger::W)
    }

    /// The Liouville field `s∂s + t∂t`.
    pub fn liouville_real(&self) -> [f64; 4] {
        [0.0, 0.0, self.at.w.re, self.at.w.im]
    }
}

pub fn pair(form: &[C64; 4], vector: &[C64; 4]) -> C64 {
    (0..4).map(|k| form[k] * vector[k]).sum()
}

pub fn frame_at(chart: &ConformalChart, p: Point4) -> Result<FrameData> {
    let lambda = chart.lambda_value(p.z)?;
    let gamma = chart.gamma(p.z)?;
    Ok(FrameData {
        at: p,
        lambda,
        gamma,
        eta_dz_coeff: p.w * gamma,
        x_vertical_coeff: -p.w * gamma,
    })
}

/// Jets of `w` and `w̄` at `p`.
pub fn fibre_jets(p: Point4) -> (Jet2, Jet2) {
    let [_, _, s, t] = seed_variables(p);
    (s + t.scale(I), s - t.scale(I))
}

/// `max_k |∂_k r² − λ(w η̄ + w̄ η)(∂_k)|` over the real coordinate
/// directions, with `dr²` differentiated from `r² = λ w w̄`.
pub fn dr2_identity_residual(chart: &ConformalChart, p: Point4) -> Result<f64> {
    let lambda = chart.lambda_jet(p)?;
    let (w, wb) = fibre_jets(p);
    let r2 = lambda * w * wb;
    let fr = frame_at(chart, p)?;
    let eta = fr.eta_real();
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let rhs = fr.lambda * (p.w * eta[k].conj() + p.w.conj() * eta[k]);
        worst = worst.max((r2.grad[k] - rhs).norm());
    }
    Ok(worst)
}

/// Values of `Γ` and its Wirtinger derivatives needed by the tables.
struct TableData {
    w: C64,
    gamma: C64,
    gamma_bar: C64,
    /// `∂Γ` along `z`, `z̄`.
    d_gamma: [C64; 2],
    /// `∂Γ̄` along `z`, `z̄`.
    d_gamma_bar: [C64; 2],
}

impl TableData {
    fn new(b: &BaseJets, w: C64) -> Self {
        TableData {
            w,
            gamma: b.gamma.value,
            gamma_bar: b.gamma_bar.value,
            d_gamma: [
                b.gamma.wirtinger(Wirtinger::Z),
                b.gamma.wirtinger(Wirtinger::Zbar),
            ],
            d_gamma_bar: [
                b.gamma_bar.wirtinger(Wirtinger::Z),
                b.gamma_bar.wirtinger(Wirtinger::Zbar),
            ],
        }
    }
}

/// Closed-form `∇*_v θ` for `θ ∈ {dz, dz̄, dw, dw̄}` (index 0..4), as
/// coefficients over `(dz, dz̄, dw, dw̄)`.
fn closed_table(d: &TableData, v: Wirtinger, theta: usize) -> [C64; 4] {
    let (w, wb) = (d.w, d.w.conj());
    let (g, gb) = (d.gamma, d.gamma_bar);
    let mut out = [ZERO; 4];
    match (v, theta) {
        (Wirtinger::Z, 0) => out[0] = -g,
        (Wirtinger::Z, 2) => {
            out[0] = -w * d.d_gamma[0];
            out[2] = -g;
        }
        (Wirtinger::Z, 3) => out[1] = -wb * d.d_gamma_bar[0],
        (Wirtinger::Zbar, 1) => out[1] = -gb,
        (Wirtinger::Zbar, 2) => out[0] = -w * d.d_gamma[1],
        (Wirtinger::Zbar, 3) => {
            out[1] = -wb * d.d_gamma_bar[1];
            out[3] = -gb;
        }
        (Wirtinger::W, 2) => out[0] = -g,
        (Wirtinger::Wbar, 3) => out[1] = -gb,
        _ => {}
    }
    out
}

/// `∇*_v θ` computed in the adapted coframe `(dz, dz̄, η, η̄)`, whose
/// connection forms are `Γ dz` on `dz, η` and `Γ̄ dz̄` on `dz̄, η̄`.
fn frame_route(b: &BaseJets, w: Jet2, wb: Jet2, v: Wirtinger, theta: usize) -> [C64; 4] {
    let wg = w * b.gamma;
    let wgb = wb * b.gamma_bar;
    let zero = Jet2::constant(ZERO);
    let one = Jet2::constant(ONE);
    // coefficients of θ on the adapted coframe
    let coeffs: [Jet2; 4] = match theta {
        0 => [one, zero, zero, zero],
        1 => [zero, one, zero, zero],
        2 => [-wg, zero, one, zero],
        _ => [zero, -wgb, zero, one],
    };
    let coframe: [[C64; 4]; 4] = [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [wg.value, ZERO, ONE, ZERO],
        [ZERO, wgb.value, ZERO, ONE],
    ];
    let conn_holo = if v == Wirtinger::Z { b.gamma.value } else { ZERO };
    let conn_anti = if v == Wirtinger::Zbar {
        b.gamma_bar.value
    } else {
        ZERO
    };
    let conn = [conn_holo, conn_anti, conn_holo, conn_anti];
    let mut out = [ZERO; 4];
    for a in 0..4 {
        let c = coeffs[a].wirtinger(v) - coeffs[a].value * conn[a];
        for k in 0..4 {
            out[k] += c * coframe[a][k];
        }
    }
    out
}

fn max_diff(x: &[C64; 4], y: &[C64; 4]) -> f64 {
    (0..4).map(|k| (x[k] - y[k]).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct NablaReport {
    /// Closed-form tables against the adapted-coframe computation.
    pub table: f64,
    /// `∇*_z η = −Γη`, `∇*_z̄ η = 0`, `∇*_w η = 0`, `∇*_w̄ η = 0`.
    pub eta: f64,
    /// `∇*(λ dz·dz̄) = 0` and `∇*(λ η·η̄) = 0`.
    pub parallel: f64,
}

impl NablaReport {
    pub fn max(&self) -> f64 {
        self.table.max(self.eta).max(self.parallel)
    }
}

/// `∇*_v` of a one-form with jet coefficients over `(dz, dz̄, dw, dw̄)`,
/// using the closed-form tables.
fn nabla_form(d: &TableData, v: Wirtinger, form: &[Jet2; 4]) -> [C64; 4] {
    let mut out = [ZERO; 4];
    for theta in 0..4 {
        out[theta] += form[theta].wirtinger(v);
        let t = closed_table(d, v, theta);
        for k in 0..4 {
            out[k] += form[theta].value * t[k];
        }
    }
    out
}

/// `∇*_v (c · α⊗β)` as a 4×4 coefficient table.
fn nabla_product(
    d: &TableData,
    v: Wirtinger,
    c: &Jet2,
    alpha: &[Jet2; 4],
    beta: &[Jet2; 4],
) -> [[C64; 4]; 4] {
    let da = nabla_form(d, v, alpha);
    let db = nabla_form(d, v, beta);
    let dc = c.wirtinger(v);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            dc * alpha[i].value * beta[j].value
                + c.value * (da[i] * beta[j].value + alpha[i].value * db[j])
        })
    })
}

pub fn nabla_star_table_residual(chart: &ConformalChart, p: Point4) -> Result<NablaReport> {
    let b = chart.base_jets(p)?;
    let (w, wb) = fibre_jets(p);
    let d = TableData::new(&b, p.w);
    let mut rep = NablaReport::default();
    for v in Wirtinger::ALL {
        for theta in 0..4 {
            let dev = max_diff(&closed_table(&d, v, theta), &frame_route(&b, w, wb, v, theta));
            rep.table = rep.table.max(dev);
        }
    }

    let zero = Jet2::constant(ZERO);
    let one = Jet2::constant(ONE);
    let eta = [w * b.gamma, zero, one, zero];
    let eta_bar = [zero, wb * b.gamma_bar, zero, one];
    let eta_value = eta.map(|j| j.value);
    for v in Wirtinger::ALL {
        let got = nabla_form(&d, v, &eta);
        let want: [C64; 4] = match v {
            Wirtinger::Z => eta_value.map(|c| -d.gamma * c),
            _ => [ZERO; 4],
        };
        rep.eta = rep.eta.max(max_diff(&got, &want));
    }

    let dz = [one, zero, zero, zero];
    let dzb = [zero, one, zero, zero];
    for v in Wirtinger::ALL {
        for (alpha, beta) in [(&dz, &dzb), (&eta, &eta_bar)] {
            let t = nabla_product(&d, v, &b.lambda, alpha, beta);
            let worst = t.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
            rep.parallel = rep.parallel.max(worst);
        }
    }
    Ok(rep)
}

/// The `dz̄∧dw̄` component of `dη`, from jet derivatives of the
/// real-coordinate coefficients of `η`.
pub fn eta_02_residual(chart: &ConformalChart, p: Point4) -> Result<f64> {
    let b = chart.base_jets(p)?;
    let (w, _) = fibre_jets(p);
    let wg = w * b.gamma;
    let eta: [Jet2; 4] = [
        wg,
        wg.scale(I),
        Jet2::constant(ONE),
        Jet2::constant(I),
    ];
    let u = coordinate_vector(Wirtinger::Zbar);
    let v = coordinate_vector(Wirtinger::Wbar);
    let mut acc = ZERO;
    for k in 0..4 {
        for l in 0..4 {
            let d_eta = eta[l].grad[k] - eta[k].grad[l];
            acc += d_eta * u[k] * v[l];
        }
    }
    Ok(acc.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_points, FibreRange};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flat_frame_is_trivial() {
        let fr = frame_at(&ConformalChart::flat(), Point4::new(c(0.4, 1.0), c(2.0, -1.0))).unwrap();
        assert_eq!(fr.eta(), [ZERO, ZERO, ONE, ZERO]);
        assert_eq!(fr.x_real(), coordinate_vector(Wirtinger::Z));
    }

    #[test]
    fn sphere_eta_coefficient() {
        let fr = frame_at(&ConformalChart::sphere(), Point4::new(c(1.0, 0.0), c(2.0, 0.0))).unwrap();
        assert!((fr.eta_dz_coeff - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eta_annihilates_x_and_normalizes_dw() {
        for chart in [ConformalChart::sphere(), ConformalChart::hyperbolic()] {
            for p in sample_points(&chart, FibreRange::Square { half_width: 2.0 }, 20, 5, 1e-3) {
                let fr = frame_at(&chart, p).unwrap();
                assert_eq!(pair(&fr.eta_real(), &fr.x_real()), ZERO);
                assert_eq!(pair(&fr.eta_real(), &fr.vertical_real()), ONE);
            }
        }
    }

    #[test]
    fn liouville_field_in_complex_form() {
        let p = Point4::new(c(0.1, 0.2), c(0.7, -1.3));
        let fr = frame_at(&ConformalChart::flat(), p).unwrap();
        let dw = coordinate_vector(Wirtinger::W);
        let dwb = coordinate_vector(Wirtinger::Wbar);
        let u: [C64; 4] = std::array::from_fn(|k| p.w * dw[k] + p.w.conj() * dwb[k]);
        let want = fr.liouville_real();
        for k in 0..4 {
            assert!((u[k] - c(want[k], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dr2_identity() {
        let flat = ConformalChart::flat();
        assert!(dr2_identity_residual(&flat, Point4::new(c(0.0, 0.0), c(1.0, 1.0))).unwrap() < 1e-12);
        let sphere = ConformalChart::sphere();
        assert_eq!(
            dr2_identity_residual(&sphere, Point4::new(c(0.3, 0.1), c(0.0, 0.0))).unwrap(),
            0.0
        );
        let worst = sample_points(&sphere, FibreRange::Square { half_width: 2.0 }, 100, 9, 1e-3)
            .into_iter()
            .map(|p| dr2_identity_residual(&sphere, p).unwrap())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn flat_tables_vanish_exactly() {
        let rep = nabla_star_table_residual(
            &ConformalChart::flat(),
            Point4::new(c(0.5, 0.5), c(1.0, -2.0)),
        )
        .unwrap();
        assert_eq!(rep.max(), 0.0);
    }

    #[test]
    fn curved_tables_hold() {
        for chart in [ConformalChart::sphere(), ConformalChart::hyperbolic()] {
            for p in sample_points(&chart, FibreRange::Square { half_width: 2.0 }, 100, 2, 1e-3) {
                let rep = nabla_star_table_residual(&chart, p).unwrap();
                assert!(rep.max() < 1e-9, "{rep:?} at {p:?}");
            }
        }
    }

    #[test]
    fn parallelism_detects_a_wrong_table() {
        // Using Γ̄ in place of Γ breaks ∇*(λ dz·dz̄) = 0 on the sphere.
        let chart = ConformalChart::sphere();
        let p = Point4::new(c(0.5, 0.3), c(1.0, 0.0));
        let b = chart.base_jets(p).unwrap();
        let mut d = TableData::new(&b, p.w);
        d.gamma = d.gamma_bar;
        let one = Jet2::constant(ONE);
        let zero = Jet2::constant(ZERO);
        let t = nabla_product(
            &d,
            Wirtinger::Z,
            &b.lambda,
            &[one, zero, zero, zero],
            &[zero, one, zero, zero],
        );
        assert!(t[0][1].norm() > 1e-3);
    }

    #[test]
    fn eta_has_no_02_part() {
        for chart in [ConformalChart::sphere(), ConformalChart::hyperbolic()] {
            for p in sample_points(&chart, FibreRange::Square { half_width: 2.0 }, 50, 4, 1e-3) {
                assert!(eta_02_residual(&chart, p).unwrap() < 1e-12);
            }
        }
    }
}
