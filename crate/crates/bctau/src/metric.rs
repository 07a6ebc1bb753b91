//! Complex metrics `h = e^{2 psi} dz dw-bar` on the torus, written in a
//! Beltrami chart, with their Laplacian, curvature, cubic norm and area form.
//!
//! The chart is `w = w(z, zbar)` with Beltrami coefficient `mu = -w_zbar/w_z`.
//! Writing `p = w_z` and `r = w_zbar` we store
//! `A = dz/dw = conj(p)/(|p|^2 - |r|^2)` and `B = dw-bar/dzbar = conj(p)`, so
//! that `d/dw = A (d/dz + conj(mu) d/dzbar)` and `A conj(B) (1 - |mu|^2) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{self, Field};

/// Errors raised while building charts and metrics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    /// `sup |mu| >= 1`: the chart does not define a positive complex metric.
    #[error("Beltrami coefficient has sup |mu| = {0} >= 1")]
    NotPositive(f64),
    /// Fields live on grids of different sizes.
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    /// Non-finite values in the input.
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
}

/// One Fourier term `c exp(2 pi i (kx x + ky y))` of a chart map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapMode {
    /// Wavenumber in `x`.
    pub kx: i32,
    /// Wavenumber in `y`.
    pub ky: i32,
    /// Complex amplitude.
    pub c: Complex64,
}

/// A Beltrami chart on the torus with cached derived coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiChart {
    /// Beltrami coefficient `mu`.
    pub mu: Field,
    /// `A = dz/dw`.
    pub a: Field,
    /// `B = dw-bar/dzbar`.
    pub b: Field,
    /// `d conj(mu)/dzbar`, the first-order coefficient of the Laplacian.
    pub mubar_zb: Field,
    /// `d log A/dzbar`.
    pub la: Field,
    /// `d log B/dw`.
    pub lb: Field,
}

impl BeltramiChart {
    /// The identity chart `w = z`.
    pub fn flat(n: usize) -> Self {
        let zero = Field::zeros(n);
        Self::from_derivatives(&Field::constant(n, 1.0.into()), &zero).expect("flat chart")
    }

    /// The linear chart `w = z + a zbar` with constant `mu = -a`.
    pub fn constant(n: usize, a: Complex64) -> Result<Self, MetricError> {
        Self::from_map(n, a, &[])
    }

    /// The chart `w = z + a zbar + sum_k c_k exp(2 pi i (kx x + ky y))`.
    pub fn from_map(n: usize, a: Complex64, modes: &[MapMode]) -> Result<Self, MetricError> {
        let deriv = |sign: f64| {
            Field::from_fn(n, |x, y| {
                modes.iter().fold(Complex64::new(0.0, 0.0), |acc, m| {
                    let (kx, ky) = (m.kx as f64, m.ky as f64);
                    let e = Complex64::new(0.0, 2.0 * PI * (kx * x + ky * y)).exp();
                    // d/dz e = pi (i kx + ky) e, d/dzbar e = pi (i kx - ky) e.
                    acc + m.c * Complex64::new(sign * PI * ky, PI * kx) * e
                })
            })
        };
        let p = deriv(1.0).map(|z| z + 1.0);
        let r = deriv(-1.0).map(|z| z + a);
        Self::from_derivatives(&p, &r)
    }

    /// Builds the chart from `p = w_z` and `r = w_zbar` sampled on the grid.
    pub fn from_derivatives(p: &Field, r: &Field) -> Result<Self, MetricError> {
        if p.n() != r.n() {
            return Err(MetricError::GridMismatch(p.n(), r.n()));
        }
        if !p.is_finite() || !r.is_finite() {
            return Err(MetricError::NonFinite("chart derivatives"));
        }
        let mu = r.zip_map(p, |r, p| -r / p);
        let sup = mu.max_abs();
        if sup >= 1.0 {
            return Err(MetricError::NotPositive(sup));
        }
        let a = p.zip_map(r, |p, r| p.conj() / (p.norm_sqr() - r.norm_sqr()));
        let b = p.conj();
        let mubar_zb = grid::dzb(&mu.conj());
        let mut chart = Self {
            mu,
            a,
            b,
            mubar_zb,
            la: Field::zeros(p.n()),
            lb: Field::zeros(p.n()),
        };
        let (la, lb) = commutator_coeffs(&chart);
        chart.la = la;
        chart.lb = lb;
        Ok(chart)
    }

    /// Grid size.
    pub fn n(&self) -> usize {
        self.mu.n()
    }

    /// `df/dw = A (f_z + conj(mu) f_zbar)`.
    pub fn dw(&self, f: &Field) -> Field {
        let fz = grid::dz(f);
        let fzb = grid::dzb(f);
        let n = f.n();
        Field::from_index_fn(n, |i, j| {
            self.a.at(i, j) * (fz.at(i, j) + self.mu.at(i, j).conj() * fzb.at(i, j))
        })
    }

    /// Largest deviation of the pointwise identity `A conj(B) (1 - |mu|^2) = 1`
    /// and of the integrability condition `d conj(B)/dzbar + d(mu conj(B))/dz = 0`.
    pub fn consistency_residual(&self) -> ChartConsistency {
        let pointwise = Field::from_index_fn(self.n(), |i, j| {
            let m = self.mu.at(i, j);
            self.a.at(i, j) * self.b.at(i, j).conj() * (1.0 - m.norm_sqr()) - 1.0
        })
        .max_abs();
        let bbar = self.b.conj();
        let integrability = (&grid::dzb(&bbar) + &grid::dz(&(&self.mu * &bbar))).max_abs();
        ChartConsistency {
            pointwise,
            integrability,
        }
    }

    /// True when `mu` is constant to rounding.
    pub fn is_constant(&self) -> bool {
        self.mu.oscillation() <= 1e-14 && self.b.oscillation() <= 1e-14
    }
}

/// Residuals of the chart identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartConsistency {
    /// Pointwise `A conj(B) (1 - |mu|^2) - 1`; exact up to rounding.
    pub pointwise: f64,
    /// Discrete integrability defect; `O(h^2)`.
    pub integrability: f64,
}

/// A complex metric `e^{2 psi} dz dw-bar` in a given chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMetric {
    /// Conformal factor (complex in general).
    pub psi: Field,
    /// The chart.
    pub chart: BeltramiChart,
}

impl ComplexMetric {
    /// Pairs a conformal factor with a chart on the same grid.
    pub fn new(psi: Field, chart: BeltramiChart) -> Result<Self, MetricError> {
        if psi.n() != chart.n() {
            return Err(MetricError::GridMismatch(psi.n(), chart.n()));
        }
        if !psi.is_finite() {
            return Err(MetricError::NonFinite("psi"));
        }
        Ok(Self { psi, chart })
    }

    /// The flat metric `dz dzbar` on an `n` grid.
    pub fn flat(n: usize) -> Self {
        Self {
            psi: Field::zeros(n),
            chart: BeltramiChart::flat(n),
        }
    }

    /// Grid size.
    pub fn n(&self) -> usize {
        self.psi.n()
    }

    /// `s^2 = e^{2 psi} A B`, the frame normalisation.
    pub fn s2(&self) -> Field {
        Field::from_index_fn(self.n(), |i, j| {
            (2.0 * self.psi.at(i, j)).exp() * self.chart.a.at(i, j) * self.chart.b.at(i, j)
        })
    }

    /// `s = e^{psi} sqrt(A B)`, continuous in `psi`.
    pub fn s(&self) -> Field {
        Field::from_index_fn(self.n(), |i, j| {
            self.psi.at(i, j).exp() * (self.chart.a.at(i, j) * self.chart.b.at(i, j)).sqrt()
        })
    }

    /// Density of the area form `dA_h = 2 e^{2 psi} B dx dy`.
    pub fn area_density(&self) -> Field {
        Field::from_index_fn(self.n(), |i, j| {
            2.0 * (2.0 * self.psi.at(i, j)).exp() * self.chart.b.at(i, j)
        })
    }

    /// The Laplacian as a reusable linear operator.
    pub fn laplacian_op(&self) -> LaplacianOp {
        let c0 = Field::from_index_fn(self.n(), |i, j| {
            2.0 * (-2.0 * self.psi.at(i, j)).exp() / self.chart.b.at(i, j)
        });
        let c1 = &c0 * &self.chart.mu.conj();
        let c2 = &c0 * &self.chart.mubar_zb;
        LaplacianOp { c0, c1, c2 }
    }
}

/// The Laplacian `2 e^{-2 psi}/B (f_zzbar + conj(mu) f_zbarzbar + conj(mu)_zbar f_zbar)`
/// with its coefficients precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianOp {
    c0: Field,
    c1: Field,
    c2: Field,
}

impl LaplacianOp {
    /// Applies the operator with fused compact stencils.
    pub fn apply(&self, f: &Field) -> Field {
        let n = f.n();
        assert_eq!(n, self.c0.n(), "field size does not match the metric");
        let h = f.h();
        let (s2, s1) = (0.25 / (h * h), 0.25 / h);
        let i_unit = Complex64::new(0.0, 1.0);
        Field::from_index_fn(n, |i, j| {
            let (i, j) = (i as isize, j as isize);
            let c = f.wrap(i, j);
            let (e, w) = (f.wrap(i + 1, j), f.wrap(i - 1, j));
            let (no, so) = (f.wrap(i, j + 1), f.wrap(i, j - 1));
            let xy = 0.25
                * (f.wrap(i + 1, j + 1) - f.wrap(i + 1, j - 1) - f.wrap(i - 1, j + 1)
                    + f.wrap(i - 1, j - 1));
            let zzb = (e + w + no + so - 4.0 * c) * s2;
            let zbzb = ((e + w) - (no + so) + 2.0 * i_unit * xy) * s2;
            let zb = ((e - w) + i_unit * (no - so)) * s1;
            let (iu, ju) = (i as usize, j as usize);
            self.c0.at(iu, ju) * zzb + self.c1.at(iu, ju) * zbzb + self.c2.at(iu, ju) * zb
        })
    }

    /// Diagonal (centre-node) coefficient of the stencil.
    pub fn diagonal(&self) -> Field {
        let h2 = self.c0.h() * self.c0.h();
        self.c0.scale_re(-1.0 / h2)
    }
}

/// Cubic differential pair `C = (alpha dz^3, beta dw-bar^3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicPair {
    /// Coefficient of `dz^3`.
    pub alpha: Field,
    /// Coefficient of `dw-bar^3`.
    pub beta: Field,
    /// Whether the pair is declared holomorphic. Solvers then project both
    /// coefficients onto the periodic holomorphic functions, i.e. constants.
    pub holomorphic: bool,
}

impl CubicPair {
    /// Constant coefficients (always holomorphic).
    pub fn constant(n: usize, alpha: Complex64, beta: Complex64) -> Self {
        Self {
            alpha: Field::constant(n, alpha),
            beta: Field::constant(n, beta),
            holomorphic: true,
        }
    }

    /// The zero pair.
    pub fn zero(n: usize) -> Self {
        Self::constant(n, 0.0.into(), 0.0.into())
    }

    /// Grid size.
    pub fn n(&self) -> usize {
        self.alpha.n()
    }

    /// Projects onto holomorphic data when flagged. On the torus the discrete
    /// kernels of `d/dzbar` and `d/dw` are the constants plus grid-scale
    /// checkerboard modes; the latter are discarded.
    pub fn projected(&self) -> Self {
        if !self.holomorphic {
            return self.clone();
        }
        let n = self.n();
        Self {
            alpha: Field::constant(n, self.alpha.mean()),
            beta: Field::constant(n, self.beta.mean()),
            holomorphic: true,
        }
    }
}

/// Commutator coefficients `(d log A/dzbar, d log B/dw)` of the frame
/// `{d/dw, d/dzbar}`: `[d/dzbar, d/dw] = a d/dw - b d/dzbar`.
pub fn commutator_coeffs(chart: &BeltramiChart) -> (Field, Field) {
    let la = grid::dzb(&chart.a).div(&chart.a);
    let lb = chart.dw(&chart.b).div(&chart.b);
    (la, lb)
}

/// The Laplace-Beltrami operator of `h` applied to `f`.
pub fn laplacian(h: &ComplexMetric, f: &Field) -> Field {
    h.laplacian_op().apply(f)
}

/// Gaussian curvature `K_h = -Lap_h psi`.
pub fn curvature(h: &ComplexMetric) -> Field {
    -&laplacian(h, &h.psi)
}

/// Pointwise squared norm `||C||_h^2 = alpha conj(beta) A^3 B^3 / (8 s^6)`.
pub fn cubic_norm(h: &ComplexMetric, c: &CubicPair) -> Field {
    let s2 = h.s2();
    Field::from_index_fn(h.n(), |i, j| {
        let ab = h.chart.a.at(i, j) * h.chart.b.at(i, j);
        c.alpha.at(i, j) * c.beta.at(i, j).conj() * ab * ab * ab / (8.0 * s2.at(i, j).powi(3))
    })
}

/// `int f dA_h` by the periodic rectangle rule.
pub fn area_integrate(h: &ComplexMetric, f: &Field) -> Complex64 {
    let dens = h.area_density();
    let hh = f.h() * f.h();
    (&dens * f).sum() * hh
}

/// Number of directions at which the principal symbol is sampled.
pub const SYMBOL_SAMPLES: usize = 360;

/// Principal symbol `1 + conj(mu) e^{2 i theta}` of the bracket in
/// [`laplacian`] (up to a positive factor) in direction `theta`.
pub fn symbol(mu: Complex64, theta: f64) -> Complex64 {
    1.0 + mu.conj() * Complex64::new(0.0, 2.0 * theta).exp()
}

/// True iff the symbol has no nonzero real root. The symbol is sampled on
/// [`SYMBOL_SAMPLES`] directions; its exact minimum `| 1 - |mu| |` over the
/// circle catches roots between samples.
pub fn symbol_check(mu: Complex64) -> bool {
    let sampled = (0..SYMBOL_SAMPLES)
        .map(|k| symbol(mu, PI * k as f64 / SYMBOL_SAMPLES as f64).norm())
        .fold(f64::INFINITY, f64::min);
    let exact = (1.0 - mu.norm()).abs();
    sampled > 1e-12 && exact > 1e-12
}

/// [`symbol_check`] at every node.
pub fn symbol_check_field(mu: &Field) -> bool {
    mu.data().iter().all(|&m| symbol_check(m))
}

/// Christoffel symbols of the Levi-Civita connection of `h` in the frame
/// `{d/dw, d/dzbar}`; all other symbols vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    /// `Gamma^w_{zbar w}`.
    pub w_zb_w: Field,
    /// `Gamma^zbar_{w zbar}`.
    pub zb_w_zb: Field,
    /// `Gamma^zbar_{zbar zbar}`.
    pub zb_zb_zb: Field,
    /// `Gamma^w_{w w}`.
    pub w_w_w: Field,
}

/// Christoffel symbols from the Koszul formula, using only `s^2 = h(d/dw, d/dzbar)`
/// and the commutator coefficients.
pub fn christoffel(h: &ComplexMetric) -> Christoffel {
    let (la, lb) = commutator_coeffs(&h.chart);
    let s2 = h.s2();
    let dlog_zb = grid::dzb(&s2).div(&s2);
    let dlog_w = h.chart.dw(&s2).div(&s2);
    Christoffel {
        zb_zb_zb: &dlog_zb - &la,
        w_w_w: &dlog_w - &lb,
        w_zb_w: la,
        zb_w_zb: lb,
    }
}

/// Circulation of `d phi o J` around the dual cell of each node, divided by
/// the cell area `h^2`.
///
/// In the `(z, zbar)` coframe `d phi o J = F dz + G dzbar` with
/// `F = -i (phi_z + 2 conj(mu) phi_zbar)` and `G = i phi_zbar`. Edge values use
/// a one-sided difference across the edge and the average of centered
/// differences along it. By Stokes the result approximates
/// `(Lap_h phi) dA_h / (dx dy)`.
pub fn stokes_density(h: &ComplexMetric, phi: &Field) -> Field {
    let n = phi.n();
    let step = phi.h();
    let (px, py) = (grid::dx(phi), grid::dy(phi));
    let mu = &h.chart.mu;
    let i_unit = Complex64::new(0.0, 1.0);
    // The form at the midpoint of the edge from node a to node b.
    let form = |fx: Complex64, fy: Complex64, m: Complex64| {
        let fz = 0.5 * (fx - i_unit * fy);
        let fzb = 0.5 * (fx + i_unit * fy);
        let f = -i_unit * (fz + 2.0 * m.conj() * fzb);
        let g = i_unit * fzb;
        (f, g)
    };
    Field::from_index_fn(n, |i, j| {
        let (ii, jj) = (i as isize, j as isize);
        let w = |a: isize, b: isize| ((a.rem_euclid(n as isize)) as usize, (b.rem_euclid(n as isize)) as usize);
        let horiz = |b: isize| {
            // Edge between (i, b - 1) and (i, b), traversed in +x.
            let (lo, hi) = (w(ii, b - 1), w(ii, b));
            let fy = (phi.at(hi.0, hi.1) - phi.at(lo.0, lo.1)) / step;
            let fx = 0.5 * (px.at(hi.0, hi.1) + px.at(lo.0, lo.1));
            let m = 0.5 * (mu.at(hi.0, hi.1) + mu.at(lo.0, lo.1));
            let (f, g) = form(fx, fy, m);
            f + g
        };
        let vert = |a: isize| {
            // Edge between (a - 1, j) and (a, j), traversed in +y.
            let (lo, hi) = (w(a - 1, jj), w(a, jj));
            let fx = (phi.at(hi.0, hi.1) - phi.at(lo.0, lo.1)) / step;
            let fy = 0.5 * (py.at(hi.0, hi.1) + py.at(lo.0, lo.1));
            let m = 0.5 * (mu.at(hi.0, hi.1) + mu.at(lo.0, lo.1));
            let (f, g) = form(fx, fy, m);
            i_unit * (f - g)
        };
        let circ = horiz(jj) - horiz(jj + 1) + vert(ii + 1) - vert(ii);
        circ / step
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(n: usize) -> Field {
        Field::from_real_fn(n, |x, y| 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos())
    }

    fn wavy_chart(n: usize) -> BeltramiChart {
        let modes = [
            MapMode {
                kx: 1,
                ky: 1,
                c: Complex64::new(0.01, 0.02),
            },
            MapMode {
                kx: 2,
                ky: -1,
                c: Complex64::new(-0.005, 0.01),
            },
        ];
        BeltramiChart::from_map(n, Complex64::new(0.2, -0.1), &modes).unwrap()
    }

    #[test]
    fn constant_chart_coefficients() {
        let a = Complex64::new(0.3, 0.1);
        let ch = BeltramiChart::constant(8, a).unwrap();
        assert!((ch.mu.at(3, 4) + a).norm() < 1e-15);
        assert!((ch.a.at(0, 0) - 1.0 / (1.0 - a.norm_sqr())).norm() < 1e-15);
        assert!((ch.b.at(5, 1) - 1.0).norm() < 1e-15);
        assert!(ch.la.max_abs() < 1e-12 && ch.lb.max_abs() < 1e-12);
    }

    #[test]
    fn chart_identities_hold() {
        let c64 = wavy_chart(64).consistency_residual();
        let c128 = wavy_chart(128).consistency_residual();
        assert!(c64.pointwise < 1e-14);
        let ratio = c64.integrability / c128.integrability;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn non_positive_chart_rejected() {
        assert!(matches!(
            BeltramiChart::constant(8, Complex64::new(1.0, 0.0)),
            Err(MetricError::NotPositive(_))
        ));
    }

    #[test]
    fn flat_unit_torus_has_area_two() {
        let h = ComplexMetric::flat(16);
        let one = Field::constant(16, 1.0.into());
        assert!((area_integrate(&h, &one) - 2.0).norm() < 1e-13);
    }

    #[test]
    fn flat_laplacian_of_wave() {
        // dz dzbar is twice the Euclidean metric, so Lap = (f_xx + f_yy)/2.
        let n = 256;
        let h = ComplexMetric::flat(n);
        let f = Field::from_real_fn(n, |x, _| (2.0 * PI * x).cos());
        let exact = f.scale_re(-2.0 * PI * PI);
        let err = (&laplacian(&h, &f) - &exact).max_abs();
        assert!(err < 1e-2, "err {err}");
    }

    #[test]
    fn conformal_change_rule() {
        // K_{e^{2u} g} = e^{-2u} (K_g - Lap_g u).
        let n = 64;
        let chart = wavy_chart(n);
        let g = ComplexMetric::new(bump(n), chart.clone()).unwrap();
        let u = Field::from_real_fn(n, |x, y| 0.05 * (2.0 * PI * (x + y)).cos());
        let h = ComplexMetric::new(&g.psi + &u, chart).unwrap();
        let lhs = curvature(&h);
        let rhs = (&curvature(&g) - &laplacian(&g, &u)).zip_map(&u, |k, u| (-2.0 * u).exp() * k);
        assert!((&lhs - &rhs).max_abs() < 1e-11);
    }

    #[test]
    fn symbol_roots_only_on_unit_circle() {
        assert!(symbol_check(Complex64::new(0.3, 0.0)));
        assert!(symbol_check(Complex64::new(0.0, 0.0)));
        assert!(!symbol_check(Complex64::new(1.0, 0.0)));
        assert!(!symbol_check(Complex64::from_polar(1.0, 0.37)));
        assert!(symbol_check(Complex64::new(1.5, 0.0)));
    }

    #[test]
    fn christoffel_closed_forms() {
        let err = |n: usize| {
            let h = ComplexMetric::new(bump(n), wavy_chart(n)).unwrap();
            let ch = christoffel(&h);
            let psi_zb = grid::dzb(&h.psi);
            let psi_w = h.chart.dw(&h.psi);
            let lbz = grid::dzb(&h.chart.b).div(&h.chart.b);
            let law = h.chart.dw(&h.chart.a).div(&h.chart.a);
            let e1 = (&ch.zb_zb_zb - &(&psi_zb.scale_re(2.0) + &lbz)).max_abs();
            let e2 = (&ch.w_w_w - &(&psi_w.scale_re(2.0) + &law)).max_abs();
            e1.max(e2)
        };
        let (e64, e128) = (err(64), err(128));
        assert!(e128 < 5e-3, "err {e128}");
        assert!(e64 / e128 > 3.5, "ratio {}", e64 / e128);
    }

    #[test]
    fn stokes_density_matches_laplacian_area_form() {
        for mu in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0), Complex64::from_polar(0.3, PI / 5.0)] {
            let n = 64;
            let chart = BeltramiChart::constant(n, -mu).unwrap();
            let psi = Field::from_real_fn(n, |x, y| 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
            let h = ComplexMetric::new(psi.clone(), chart).unwrap();
            let rhs = &laplacian(&h, &psi) * &h.area_density();
            let d = (&stokes_density(&h, &psi) - &rhs).max_abs();
            assert!(d < 1e-12, "mu = {mu}: {d:e}");
        }
    }

    #[test]
    fn stokes_density_is_second_order_on_wavy_chart() {
        let err = |n: usize| {
            let h = ComplexMetric::new(bump(n), wavy_chart(n)).unwrap();
            let phi = Field::from_real_fn(n, |x, y| (2.0 * PI * (x + y)).cos());
            let rhs = &laplacian(&h, &phi) * &h.area_density();
            (&stokes_density(&h, &phi) - &rhs).max_abs()
        };
        let ratio = err(32) / err(64);
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }
}
