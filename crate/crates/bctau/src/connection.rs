//! The flat `sl(3, C_tau)` connection `Omega = (Ahat/A) dz + (Bhat/B) dw-bar`
//! of a solution of the Gauss equation, its flatness residuals, holonomy and
//! Higgs splitting.
//!
//! Everything is stored in the idempotent basis. The `tau` unit has parts
//! `(+1, -1)`, so each matrix is assembled twice with `t = +1` and `t = -1`
//! in front of the cubic entries. The frame is `(e1, e2, sigma)` with Gram
//! matrix `Qt` under the bilinear form `q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bicomplex::{self, AlgebraError};
use crate::expm::expm_bc;
use crate::grid::{self, Field};
use crate::metric::{self, BeltramiChart, ComplexMetric, CubicPair};
use crate::{mat3, BcMat3f, CMat3f};

/// Advisory flatness threshold for holonomy computations.
pub const FLATNESS_WARN: f64 = 1e-4;
/// Tolerance of the `Phi`-image compatibility accepted by [`to_sl3`].
pub const IMAGE_TOL: f64 = 1e-8;

/// Errors raised by the connection layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConnectionError {
    /// Inputs live on different grids.
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    /// A loop does not close on the torus.
    #[error("loop displacement ({0}, {1}) is not a lattice vector of the {2} grid")]
    NotClosed(i64, i64, usize),
    /// A loop starts off the grid.
    #[error("loop start ({0}, {1}) is outside the {2} grid")]
    BadStart(usize, usize, usize),
    /// The matrix is not in the image of `Phi`.
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    /// A loop file could not be parsed.
    #[error("loop file: {0}")]
    Parse(String),
}

/// The Gram matrix `Qt` of the frame `(e1, e2, sigma)`.
pub fn q_tilde() -> CMat3f {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[z, o, z], [o, z, z], [z, z, -o]]
}

/// The pairing matrix `Ht` of the Higgs splitting.
pub fn h_tilde() -> CMat3f {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[z, o, z], [o, z, z], [z, z, o]]
}

/// The base frame in ambient coordinates: `e1 = (1, i, 0)/sqrt 2`,
/// `e2 = (1, -i, 0)/sqrt 2`, `sigma = (0, 0, 1)`. Its `q`-Gram matrix is `Qt`.
pub fn base_frame() -> BcMat3f {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let f = [
        [c(r, 0.0), c(r, 0.0), c(0.0, 0.0)],
        [c(0.0, r), c(0.0, -r), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
    ];
    BcMat3f::from_complex(f)
}

/// `Ahat` and `Bhat` on the grid together with the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatConnectionField {
    /// `Ahat` per node, row-major like [`Field`].
    pub ahat: Vec<BcMat3f>,
    /// `Bhat` per node.
    pub bhat: Vec<BcMat3f>,
    /// The chart `w`.
    pub chart: BeltramiChart,
    /// `s^2 = e^{2 psi} A B`.
    pub s2: Field,
}

impl FlatConnectionField {
    /// Grid size.
    pub fn n(&self) -> usize {
        self.chart.n()
    }

    /// `Omega(d/dx) = Ahat/A + Bhat (1 - conj(mu))` at node `(i, j)`.
    pub fn omega_x(&self, i: usize, j: usize) -> BcMat3f {
        let k = j * self.n() + i;
        let a = self.chart.a.at(i, j);
        let mb = self.chart.mu.at(i, j).conj();
        self.ahat[k].scale_c(1.0 / a).add(&self.bhat[k].scale_c(1.0 - mb))
    }

    /// `Omega(d/dy) = i Ahat/A - i Bhat (1 + conj(mu))` at node `(i, j)`.
    pub fn omega_y(&self, i: usize, j: usize) -> BcMat3f {
        let k = j * self.n() + i;
        let a = self.chart.a.at(i, j);
        let mb = self.chart.mu.at(i, j).conj();
        let im = Complex64::new(0.0, 1.0);
        self.ahat[k].scale_c(im / a).sub(&self.bhat[k].scale_c(im * (1.0 + mb)))
    }

    /// Largest `|tr Ahat|` or `|tr Bhat|` over the grid.
    pub fn trace_defect(&self) -> f64 {
        self.ahat
            .iter()
            .chain(&self.bhat)
            .map(|m| m.trace().norm_max())
            .fold(0.0, f64::max)
    }

    /// Largest defect of the infinitesimal isometry condition
    /// `X- = -Qt X+^T Qt` over `Ahat` and `Bhat`.
    pub fn compat_defect(&self) -> f64 {
        self.ahat
            .iter()
            .chain(&self.bhat)
            .map(infinitesimal_compat_defect)
            .fold(0.0, f64::max)
    }

    /// Gauge transform by a constant `g`: `Ahat -> g^-1 Ahat g`, same for `Bhat`.
    pub fn conjugate(&self, g: &BcMat3f) -> Result<Self, ConnectionError> {
        let gi = g.inverse()?;
        let conj = |m: &BcMat3f| gi.mul(m).mul(g);
        Ok(Self {
            ahat: self.ahat.iter().map(conj).collect(),
            bhat: self.bhat.iter().map(conj).collect(),
            chart: self.chart.clone(),
            s2: self.s2.clone(),
        })
    }
}

/// `|X- + Qt X+^T Qt|`, zero for `X` in the Lie algebra preserving `q` on the frame.
pub fn infinitesimal_compat_defect(x: &BcMat3f) -> f64 {
    let q = q_tilde();
    let expect = mat3::mul(&mat3::mul(&q, &mat3::transpose(&x.plus)), &q);
    mat3::max_abs(&mat3::add(&x.minus, &expect))
}

/// `|G- - Qt (G+^-1)^T Qt|` relative to `max(1, |G-|)`, the group version.
pub fn frame_compat_defect(g: &BcMat3f) -> Result<f64, ConnectionError> {
    let inv = bicomplex::checked_inverse(&g.plus)?;
    let q = q_tilde();
    let expect = mat3::mul(&mat3::mul(&q, &mat3::transpose(&inv)), &q);
    Ok(mat3::dist(&g.minus, &expect) / mat3::max_abs(&g.minus).max(1.0))
}

fn check_sizes(n: usize, others: &[usize]) -> Result<(), ConnectionError> {
    match others.iter().find(|&&m| m != n) {
        Some(&m) => Err(ConnectionError::GridMismatch(n, m)),
        None => Ok(()),
    }
}

/// Builds `Ahat` and `Bhat` from `(psi, C, w)`.
pub fn assemble(
    psi: &Field,
    c: &CubicPair,
    chart: &BeltramiChart,
) -> Result<FlatConnectionField, ConnectionError> {
    let n = chart.n();
    check_sizes(n, &[psi.n(), c.n()])?;
    let h = ComplexMetric {
        psi: psi.clone(),
        chart: chart.clone(),
    };
    let s2 = h.s2();
    let s = h.s();
    let (a, b) = (&chart.a, &chart.b);
    let psi_w = chart.dw(psi);
    let psi_zb = grid::dzb(psi);
    let log_b_w = chart.dw(b).div(b);
    let log_a_w = chart.dw(a).div(a);
    let log_b_zb = grid::dzb(b).div(b);
    let log_a_zb = chart.la.clone();
    let z = Complex64::new(0.0, 0.0);
    let nodes: Vec<(BcMat3f, BcMat3f)> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let a11 = -psi_w.at(i, j) + 0.5 * log_b_w.at(i, j) - 0.5 * log_a_w.at(i, j);
            let b11 = psi_zb.at(i, j) + 0.5 * log_b_zb.at(i, j) - 0.5 * log_a_zb.at(i, j);
            let sv = s.at(i, j);
            let s2v = s2.at(i, j);
            let ca = c.alpha.at(i, j) * a.at(i, j).powi(3) / s2v;
            let cb = c.beta.at(i, j).conj() * b.at(i, j).powi(3) / s2v;
            let ahat = |t: f64| [[a11, -ca * t, z], [z, -a11, sv], [sv, z, z]];
            let bhat = |t: f64| [[b11, z, sv], [-cb * t, -b11, z], [z, sv, z]];
            (
                BcMat3f::from_parts(ahat(1.0), ahat(-1.0)),
                BcMat3f::from_parts(bhat(1.0), bhat(-1.0)),
            )
        })
        .collect();
    let (ahat, bhat) = nodes.into_iter().unzip();
    Ok(FlatConnectionField {
        ahat,
        bhat,
        chart: chart.clone(),
        s2,
    })
}

/// Applies a scalar field operator entrywise to a grid of bicomplex matrices.
fn map_entries<F>(n: usize, mats: &[BcMat3f], op: F) -> Vec<BcMat3f>
where
    F: Fn(&Field) -> Field + Sync,
{
    let mut out = vec![BcMat3f::zero(); n * n];
    for part in 0..2 {
        for r in 0..3 {
            for c in 0..3 {
                let get = |m: &BcMat3f| if part == 0 { m.plus[r][c] } else { m.minus[r][c] };
                let f = Field::from_vec(n, mats.iter().map(get).collect());
                let d = op(&f);
                for (k, v) in d.data().iter().enumerate() {
                    if part == 0 {
                        out[k].plus[r][c] = *v;
                    } else {
                        out[k].minus[r][c] = *v;
                    }
                }
            }
        }
    }
    out
}

/// `D Y - l Y` with `D` a derivative already applied, pointwise.
fn twisted(dy: &[BcMat3f], l: &Field, y: &[BcMat3f]) -> Vec<BcMat3f> {
    dy.iter()
        .zip(y)
        .zip(l.data())
        .map(|((d, y), l)| d.sub(&y.scale_c(*l)))
        .collect()
}

/// `Bhat_w - (d log B/dw) Bhat - Ahat_zbar + (d log A/dzbar) Ahat + [Ahat, Bhat]`.
pub fn maurer_cartan_residual(conn: &FlatConnectionField) -> Vec<BcMat3f> {
    let n = conn.n();
    let b_w = map_entries(n, &conn.bhat, |f| conn.chart.dw(f));
    let a_zb = map_entries(n, &conn.ahat, grid::dzb);
    let tb = twisted(&b_w, &conn.chart.lb, &conn.bhat);
    let ta = twisted(&a_zb, &conn.chart.la, &conn.ahat);
    (0..n * n)
        .map(|k| tb[k].sub(&ta[k]).add(&conn.ahat[k].commutator(&conn.bhat[k])))
        .collect()
}

/// Largest entry of a matrix field.
pub fn max_abs(mats: &[BcMat3f]) -> f64 {
    mats.iter().map(|m| m.norm_max()).fold(0.0, f64::max)
}

/// The reduced form of flatness: Gauss line `r0` and the two holomorphy
/// lines, stored as their `tau` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// `s^2 (Lap_h psi + 8 ||C||_h^2 - 1)`.
    pub r0: Field,
    /// `alpha_zbar A^3 / s^2`.
    pub r1_tau: Field,
    /// `(d conj(beta)/dw) B^3 / s^2`.
    pub r2_tau: Field,
}

/// Evaluates the reduced system on `(psi, C, w)`.
pub fn reduced_system_residual(
    psi: &Field,
    c: &CubicPair,
    chart: &BeltramiChart,
) -> Result<ReducedSystem, ConnectionError> {
    let n = chart.n();
    check_sizes(n, &[psi.n(), c.n()])?;
    let h = ComplexMetric {
        psi: psi.clone(),
        chart: chart.clone(),
    };
    let s2 = h.s2();
    let lap = metric::laplacian(&h, psi);
    let c8 = metric::cubic_norm(&h, c);
    let r0 = Field::from_index_fn(n, |i, j| s2.at(i, j) * (lap.at(i, j) + 8.0 * c8.at(i, j) - 1.0));
    let a_zb = grid::dzb(&c.alpha);
    let bbar_w = chart.dw(&c.beta.conj());
    let r1_tau = Field::from_index_fn(n, |i, j| a_zb.at(i, j) * chart.a.at(i, j).powi(3) / s2.at(i, j));
    let r2_tau =
        Field::from_index_fn(n, |i, j| bbar_w.at(i, j) * chart.b.at(i, j).powi(3) / s2.at(i, j));
    Ok(ReducedSystem { r0, r1_tau, r2_tau })
}

/// The Maurer–Cartan matrix predicted by the reduced system: `r0` at
/// (1,1), `-r0` at (2,2), `tau r1` at (1,2), `-tau r2` at (2,1).
pub fn reduced_to_matrix(red: &ReducedSystem) -> Vec<BcMat3f> {
    let n = red.r0.n();
    (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let (r0, r1, r2) = (red.r0.at(i, j), red.r1_tau.at(i, j), red.r2_tau.at(i, j));
            let mut m = BcMat3f::zero();
            for (part, t) in [(0usize, 1.0), (1, -1.0)] {
                let x = if part == 0 { &mut m.plus } else { &mut m.minus };
                x[0][0] = r0;
                x[1][1] = -r0;
                x[0][1] = r1 * t;
                x[1][0] = -r2 * t;
            }
            m
        })
        .collect()
}

/// Largest entrywise distance between two matrix fields.
pub fn max_dist(a: &[BcMat3f], b: &[BcMat3f]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dist(y)).fold(0.0, f64::max)
}

/// One grid step of a loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// `+h` in `x`.
    #[serde(rename = "+x")]
    XPlus,
    /// `-h` in `x`.
    #[serde(rename = "-x")]
    XMinus,
    /// `+h` in `y`.
    #[serde(rename = "+y")]
    YPlus,
    /// `-h` in `y`.
    #[serde(rename = "-y")]
    YMinus,
}

impl Step {
    fn delta(self) -> (i64, i64) {
        match self {
            Step::XPlus => (1, 0),
            Step::XMinus => (-1, 0),
            Step::YPlus => (0, 1),
            Step::YMinus => (0, -1),
        }
    }
}

/// A closed lattice path on the torus grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    /// Starting node `(i, j)`.
    #[serde(default)]
    pub start: (usize, usize),
    /// The steps in path order.
    pub steps: Vec<Step>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LoopFile {
    Bare(Vec<Step>),
    Full(Loop),
}

impl Loop {
    /// The loop `steps` from `start` after checking it closes on an `n` grid.
    pub fn new(n: usize, start: (usize, usize), steps: Vec<Step>) -> Result<Self, ConnectionError> {
        let l = Self { start, steps };
        l.validate(n)?;
        Ok(l)
    }

    /// The x-period loop through `(0, j)`.
    pub fn x_period(n: usize, j: usize) -> Self {
        Self {
            start: (0, j),
            steps: vec![Step::XPlus; n],
        }
    }

    /// The y-period loop through `(i, 0)`.
    pub fn y_period(n: usize, i: usize) -> Self {
        Self {
            start: (i, 0),
            steps: vec![Step::YPlus; n],
        }
    }

    /// Parses a JSON step list (`["+x", "-y", ...]`) or an object with
    /// `start` and `steps`.
    pub fn from_json(text: &str, n: usize) -> Result<Self, ConnectionError> {
        let parsed: LoopFile =
            serde_json::from_str(text).map_err(|e| ConnectionError::Parse(e.to_string()))?;
        let l = match parsed {
            LoopFile::Bare(steps) => Self { start: (0, 0), steps },
            LoopFile::Full(l) => l,
        };
        l.validate(n)?;
        Ok(l)
    }

    /// Total displacement in grid steps.
    pub fn displacement(&self) -> (i64, i64) {
        self.steps.iter().fold((0, 0), |(x, y), s| {
            let (dx, dy) = s.delta();
            (x + dx, y + dy)
        })
    }

    /// Checks the start node and closure.
    pub fn validate(&self, n: usize) -> Result<(), ConnectionError> {
        if self.start.0 >= n || self.start.1 >= n {
            return Err(ConnectionError::BadStart(self.start.0, self.start.1, n));
        }
        let (dx, dy) = self.displacement();
        if dx.rem_euclid(n as i64) != 0 || dy.rem_euclid(n as i64) != 0 {
            return Err(ConnectionError::NotClosed(dx, dy, n));
        }
        Ok(())
    }
}

/// Path-ordered product of `exp(h Omega)` along the loop, with `Omega`
/// averaged over the two endpoints of each step. The first step is the
/// leftmost factor, so that `F(end) = F(start) * holonomy`.
pub fn holonomy(conn: &FlatConnectionField, lp: &Loop) -> BcMat3f {
    let n = conn.n() as i64;
    let h = 1.0 / n as f64;
    let (mut i, mut j) = (lp.start.0 as i64, lp.start.1 as i64);
    let mut out = BcMat3f::identity();
    for s in &lp.steps {
        let (dx, dy) = s.delta();
        let (ni, nj) = ((i + dx).rem_euclid(n), (j + dy).rem_euclid(n));
        let (p, q) = ((i as usize, j as usize), (ni as usize, nj as usize));
        let (w0, w1, sign) = if dx != 0 {
            (conn.omega_x(p.0, p.1), conn.omega_x(q.0, q.1), dx as f64)
        } else {
            (conn.omega_y(p.0, p.1), conn.omega_y(q.0, q.1), dy as f64)
        };
        let mid = w0.add(&w1).scale_c((0.5 * sign * h).into());
        out = out.mul(&expm_bc(&mid));
        i = ni;
        j = nj;
    }
    out
}

/// Holonomy plus the flatness level of the data it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyReport {
    /// The holonomy in the frame basis.
    pub frame: BcMat3f,
    /// The same element in ambient coordinates.
    pub ambient: BcMat3f,
    /// Max-abs Maurer–Cartan residual of the field.
    pub flatness: f64,
    /// Set when `flatness` exceeds [`FLATNESS_WARN`].
    pub warning: Option<String>,
}

/// [`holonomy`] with the flatness diagnostic attached.
pub fn holonomy_checked(conn: &FlatConnectionField, lp: &Loop) -> HolonomyReport {
    let flatness = max_abs(&maurer_cartan_residual(conn));
    let warning = (flatness > FLATNESS_WARN || !flatness.is_finite()).then(|| {
        format!("Maurer-Cartan residual {flatness:.3e} exceeds {FLATNESS_WARN:e}; holonomy is not a flat-connection invariant")
    });
    let frame = holonomy(conn, lp);
    HolonomyReport {
        ambient: to_ambient(&frame),
        frame,
        flatness,
        warning,
    }
}

/// `F0 X F0^-1`: moves a frame-basis element to ambient coordinates, where
/// isometries of `q` satisfy the `Phi`-image condition.
pub fn to_ambient(x: &BcMat3f) -> BcMat3f {
    let f0 = base_frame();
    let fi = f0.inverse().expect("base frame is invertible");
    f0.mul(x).mul(&fi)
}

/// Result of [`to_sl3`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sl3Element {
    /// The `e+` part.
    pub matrix: CMat3f,
    /// `|det - 1|`.
    pub det_defect: f64,
    /// Relative `Phi`-image defect of the input.
    pub image_defect: f64,
}

/// Extracts the `SL(3, C)` element from an ambient isometry.
pub fn to_sl3(m: &BcMat3f) -> Result<Sl3Element, ConnectionError> {
    let image_defect = bicomplex::phi_defect(m)?;
    let matrix = bicomplex::phi_inv(m, IMAGE_TOL)?;
    Ok(Sl3Element {
        det_defect: (mat3::det(&matrix) - 1.0).norm(),
        matrix,
        image_defect,
    })
}

fn star(x: &CMat3f) -> CMat3f {
    let h = h_tilde();
    mat3::mul(&mat3::mul(&h, &mat3::transpose(x)), &h)
}

/// `(X + X*)/2` with `X* = Ht X^T Ht`, part by part.
pub fn sym_part(x: &BcMat3f) -> BcMat3f {
    let half = Complex64::new(0.5, 0.0);
    BcMat3f::from_parts(
        mat3::scale(&mat3::add(&x.plus, &star(&x.plus)), half),
        mat3::scale(&mat3::add(&x.minus, &star(&x.minus)), half),
    )
}

/// `(X - X*)/2`.
pub fn skew_part(x: &BcMat3f) -> BcMat3f {
    let half = Complex64::new(0.5, 0.0);
    BcMat3f::from_parts(
        mat3::scale(&mat3::sub(&x.plus, &star(&x.plus)), half),
        mat3::scale(&mat3::sub(&x.minus, &star(&x.minus)), half),
    )
}

/// Connection and Higgs parts of `Omega`. The `10` parts are `dz`
/// coefficients and the `01` parts are `dw-bar` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsData {
    /// The pairing matrix `Ht`, constant on the grid.
    pub metric_h: BcMat3f,
    /// `skew(Ahat)/A`.
    pub dh10: Vec<BcMat3f>,
    /// `skew(Bhat)/B`.
    pub dh01: Vec<BcMat3f>,
    /// `sym(Ahat)/A`.
    pub phi10: Vec<BcMat3f>,
    /// `sym(Bhat)/B`.
    pub phi01: Vec<BcMat3f>,
}

impl HiggsData {
    /// Largest deviation of `dh10 + phi10 = Ahat/A` and `dh01 + phi01 = Bhat/B`.
    pub fn reconstruction_defect(&self, conn: &FlatConnectionField) -> f64 {
        let n = conn.n();
        (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let a = conn.ahat[k].scale_c(1.0 / conn.chart.a.at(i, j));
                let b = conn.bhat[k].scale_c(1.0 / conn.chart.b.at(i, j));
                let ea = self.dh10[k].add(&self.phi10[k]).dist(&a);
                let eb = self.dh01[k].add(&self.phi01[k]).dist(&b);
                ea.max(eb)
            })
            .fold(0.0, f64::max)
    }
}

/// Splits `Omega` into `Ht`-skew (connection) and `Ht`-symmetric (Higgs) parts.
pub fn higgs_split(conn: &FlatConnectionField) -> HiggsData {
    let per = |mats: &[BcMat3f], f: fn(&BcMat3f) -> BcMat3f, scale: &Field| -> Vec<BcMat3f> {
        mats.iter()
            .zip(scale.data())
            .map(|(m, s)| f(m).scale_c(1.0 / *s))
            .collect()
    };
    HiggsData {
        metric_h: BcMat3f::from_complex(h_tilde()),
        dh10: per(&conn.ahat, skew_part, &conn.chart.a),
        dh01: per(&conn.bhat, skew_part, &conn.chart.b),
        phi10: per(&conn.ahat, sym_part, &conn.chart.a),
        phi01: per(&conn.bhat, sym_part, &conn.chart.b),
    }
}

/// The flatness equation split by the Higgs decomposition, in the
/// `Ahat`/`Bhat` normalisation of [`maurer_cartan_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsResiduals {
    /// `D^(0,1) Phi^(1,0) = Phi_a,zbar - la Phi_a + [D_b, Phi_a]`.
    pub holo10: Vec<BcMat3f>,
    /// `D^(1,0) Phi^(0,1) = Phi_b,w - lb Phi_b + [D_a, Phi_b]`.
    pub antiholo01: Vec<BcMat3f>,
    /// Curvature of `D` plus `[Phi_a, Phi_b]`.
    pub curvature: Vec<BcMat3f>,
}

/// Evaluates the Higgs-split flatness equations. The Maurer–Cartan residual
/// equals `curvature + antiholo01 - holo10`, with `curvature` its skew part.
pub fn higgs_residuals(conn: &FlatConnectionField) -> HiggsResiduals {
    let n = conn.n();
    let da: Vec<_> = conn.ahat.iter().map(skew_part).collect();
    let db: Vec<_> = conn.bhat.iter().map(skew_part).collect();
    let pa: Vec<_> = conn.ahat.iter().map(sym_part).collect();
    let pb: Vec<_> = conn.bhat.iter().map(sym_part).collect();
    let dw = |m: &[BcMat3f]| map_entries(n, m, |f| conn.chart.dw(f));
    let dzb = |m: &[BcMat3f]| map_entries(n, m, grid::dzb);
    let pa_t = twisted(&dzb(&pa), &conn.chart.la, &pa);
    let pb_t = twisted(&dw(&pb), &conn.chart.lb, &pb);
    let da_t = twisted(&dzb(&da), &conn.chart.la, &da);
    let db_t = twisted(&dw(&db), &conn.chart.lb, &db);
    let holo10 = (0..n * n).map(|k| pa_t[k].add(&db[k].commutator(&pa[k]))).collect();
    let antiholo01 = (0..n * n).map(|k| pb_t[k].add(&da[k].commutator(&pb[k]))).collect();
    let curvature = (0..n * n)
        .map(|k| {
            db_t[k]
                .sub(&da_t[k])
                .add(&da[k].commutator(&db[k]))
                .add(&pa[k].commutator(&pb[k]))
        })
        .collect();
    HiggsResiduals {
        holo10,
        antiholo01,
        curvature,
    }
}
