//! Hyperbolic affine spheres from real flat-connection data: lift
//! normalisation, frame integration, Blaschke structure, Pick form, the Wang
//! equation and the second-variation trace.
//!
//! Point fields live on an `n x n` patch with spacing `h`, row-major like
//! [`Field`]. Derivatives are second-order centered differences, so Blaschke
//! quantities exist on interior nodes at distance [`MARGIN`] from the edge.
//! Shape operators follow `D_X xi = f_*(S X)`, so a hyperbolic affine sphere
//! centred at the origin has `xi = f` and `S = Id`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chtau;
use crate::connection::{self, ConnectionError, FlatConnectionField};
use crate::expm::expm_bc;
use crate::grid::{self, Field};
use crate::BcMat3f;

/// Real 3-vector (or covector) at a node.
pub type Vec3 = Vector3<f64>;

/// Distance from the edge of the patch where Blaschke data are defined.
pub const MARGIN: usize = 3;
/// Tolerance of the reality condition on the connection.
pub const REALITY_TOL: f64 = 1e-10;
/// Smallest `|det(f_x, f_y, f)|` accepted by the Blaschke fit.
pub const FRAME_DET_TOL: f64 = 1e-10;
/// Largest relative path-independence residual accepted by [`integrate_frame`].
pub const PATH_TOL: f64 = 1e-4;
/// Tolerance on `eta(f+, f-) = -1` accepted by [`normalize_lift`].
pub const PAIRING_TOL: f64 = 1e-8;

/// Errors raised by the affine layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AffineError {
    /// Field lengths do not match the patch.
    #[error("field has {0} nodes, expected {1}")]
    SizeMismatch(usize, usize),
    /// `eta(f+, f-) = -1` fails.
    #[error("eta(f+, f-) deviates from -1 by {0:e}")]
    NotPaired(f64),
    /// The lift field is not a gradient.
    #[error("lift field has curl {curl:e} above threshold {threshold:e}")]
    NotIsotropic {
        /// Max-abs discrete curl.
        curl: f64,
        /// Accepted level.
        threshold: f64,
    },
    /// The connection is not real in ambient coordinates.
    #[error("connection is not real: imaginary part {0:e}")]
    NotReal(f64),
    /// Row-first and column-first integrations disagree.
    #[error("frame integration is path dependent: relative residual {0:e}")]
    PathDependent(f64),
    /// `{f_x, f_y, f}` is not a frame.
    #[error("degenerate frame: |det(f_x, f_y, f)| = {0:e}")]
    DegenerateFrame(f64),
    /// The transverse second fundamental form is not definite.
    #[error("second fundamental form is not definite: det = {0:e}")]
    Indefinite(f64),
    /// Error from the connection layer.
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

/// `eta(v, c) = c(v)` for a vector `v` and covector `c`.
pub fn eta(v: &Vec3, c: &Vec3) -> f64 {
    c.dot(v)
}

/// A pair `(f+, f-)` of a point field and a covector field on a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    /// Nodes per side.
    pub n: usize,
    /// Grid spacing.
    pub h: f64,
    /// `f+` per node.
    pub fplus: Vec<Vec3>,
    /// `f-` per node, as covector components.
    pub fminus: Vec<Vec3>,
}

fn idx(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

/// Centered first derivatives of a vector field at an interior node.
fn d1(f: &[Vec3], n: usize, h: f64, i: usize, j: usize) -> (Vec3, Vec3) {
    let fx = (f[idx(n, i + 1, j)] - f[idx(n, i - 1, j)]) / (2.0 * h);
    let fy = (f[idx(n, i, j + 1)] - f[idx(n, i, j - 1)]) / (2.0 * h);
    (fx, fy)
}

/// Nodes at distance at least `m` from the edge.
fn interior(n: usize, m: usize) -> impl Iterator<Item = (usize, usize)> {
    (m..n - m).flat_map(move |j| (m..n - m).map(move |i| (i, j)))
}

/// Largest finite value over the interior nodes at distance `m`.
pub fn interior_max(values: &[f64], n: usize, m: usize) -> f64 {
    interior(n, m)
        .map(|(i, j)| values[idx(n, i, j)])
        .fold(0.0, f64::max)
}

impl AffinePair {
    /// Checks the field sizes.
    pub fn new(n: usize, h: f64, fplus: Vec<Vec3>, fminus: Vec<Vec3>) -> Result<Self, AffineError> {
        for f in [&fplus, &fminus] {
            if f.len() != n * n {
                return Err(AffineError::SizeMismatch(f.len(), n * n));
            }
        }
        Ok(Self { n, h, fplus, fminus })
    }

    /// Largest `|eta(f+, f-) + 1|`.
    pub fn eta_defect(&self) -> f64 {
        self.fplus
            .iter()
            .zip(&self.fminus)
            .map(|(p, m)| (eta(p, m) + 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|eta(df+(d/dx), f-)|`, `|eta(df+(d/dy), f-)|` over interior nodes.
    pub fn conormal_defect(&self) -> f64 {
        let n = self.n;
        interior(n, 1)
            .map(|(i, j)| {
                let (fx, fy) = d1(&self.fplus, n, self.h, i, j);
                let m = &self.fminus[idx(n, i, j)];
                eta(&fx, m).abs().max(eta(&fy, m).abs())
            })
            .fold(0.0, f64::max)
    }

    /// The pair with the roles of `f+` and `f-` exchanged through `Q`.
    pub fn dual(&self) -> Self {
        let q = Vec3::new(1.0, 1.0, -1.0);
        Self {
            n: self.n,
            h: self.h,
            fplus: self.fminus.iter().map(|c| c.component_mul(&q)).collect(),
            fminus: self.fplus.iter().map(|v| v.component_mul(&q)).collect(),
        }
    }

    /// `f -> L f`, `f- -> f- L^-1`.
    pub fn transform(&self, l: &Matrix3<f64>) -> Option<Self> {
        let li = l.try_inverse()?;
        Some(Self {
            n: self.n,
            h: self.h,
            fplus: self.fplus.iter().map(|v| l * v).collect(),
            fminus: self.fminus.iter().map(|c| li.transpose() * c).collect(),
        })
    }
}

/// Rescales a periodic pair to `(e^mu f+, e^-mu f-)` so that `eta(df+, f-) = 0`.
/// `mu` is the zero-mean least-squares potential of
/// `F = (eta(f+_x, f-), eta(f+_y, f-))` for the centered difference gradient.
pub fn normalize_lift(pair: &AffinePair) -> Result<(AffinePair, Field), AffineError> {
    let n = pair.n;
    let d = pair.eta_defect();
    if d > PAIRING_TOL || !d.is_finite() {
        return Err(AffineError::NotPaired(d));
    }
    let w = |i: usize, k: isize| (i as isize + k).rem_euclid(n as isize) as usize;
    let h = pair.h;
    let comp = |dir: usize| {
        Field::from_index_fn(n, |i, j| {
            let (a, b) = if dir == 0 {
                (idx(n, w(i, 1), j), idx(n, w(i, -1), j))
            } else {
                (idx(n, i, w(j, 1)), idx(n, i, w(j, -1)))
            };
            let df = (pair.fplus[a] - pair.fplus[b]) / (2.0 * h);
            eta(&df, &pair.fminus[idx(n, i, j)]).into()
        })
    };
    let (fx, fy) = (comp(0), comp(1));
    // The stencils in grid::dx assume unit period; rescale to spacing h.
    let per = h * n as f64;
    let curl = (&grid::dx(&fy) - &grid::dy(&fx)).max_abs() / per;
    let lap = (&grid::dxx(&fx) + &grid::dyy(&fx)).max_abs() + (&grid::dxx(&fy) + &grid::dyy(&fy)).max_abs();
    let threshold = 10.0 * h * h * lap / (per * per) + 1e-12 * (fx.max_abs() + fy.max_abs() + 1.0);
    if curl > threshold {
        return Err(AffineError::NotIsotropic { curl, threshold });
    }
    let sx = grid::fft2(&fx);
    let sy = grid::fft2(&fy);
    let spec: Vec<Complex64> = (0..n * n)
        .map(|k| {
            let (kx, ky) = (k % n, k / n);
            let sym = |m: usize| Complex64::new(0.0, (2.0 * std::f64::consts::PI * m as f64 / n as f64).sin() / h);
            let (dx, dy) = (sym(kx), sym(ky));
            let den = dx.norm_sqr() + dy.norm_sqr();
            if den < 1e-12 / (h * h) {
                Complex64::new(0.0, 0.0)
            } else {
                (dx.conj() * sx[k] + dy.conj() * sy[k]) / den
            }
        })
        .collect();
    let mu = grid::ifft2(n, spec).map(|z| z.re.into());
    let out = AffinePair {
        n,
        h,
        fplus: pair.fplus.iter().zip(mu.data()).map(|(v, m)| v * m.re.exp()).collect(),
        fminus: pair.fminus.iter().zip(mu.data()).map(|(c, m)| c * (-m.re).exp()).collect(),
    };
    Ok((out, mu))
}

/// Output of [`integrate_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameIntegration {
    /// The pair on the fundamental patch `[0, 1)^2`.
    pub pair: AffinePair,
    /// Max distance between row-first and column-first frames, relative to
    /// the largest frame entry.
    pub path_residual: f64,
    /// Largest imaginary part of the extracted `sigma` columns.
    pub imaginary_part: f64,
}

fn ambient_imag(conn: &FlatConnectionField) -> f64 {
    let n = conn.n();
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n, k / n);
            [conn.omega_x(i, j), conn.omega_y(i, j)]
                .iter()
                .map(|w| {
                    let a = connection::to_ambient(w);
                    let scale = a.norm_max().max(1.0);
                    let im = |m: &crate::CMat3f| m.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
                    im(&a.plus).max(im(&a.minus)) / scale
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn step(conn: &FlatConnectionField, from: (usize, usize), dir: usize) -> BcMat3f {
    let n = conn.n();
    let h = 1.0 / n as f64;
    let (i, j) = from;
    let (w0, w1) = if dir == 0 {
        (conn.omega_x(i, j), conn.omega_x(i + 1, j))
    } else {
        (conn.omega_y(i, j), conn.omega_y(i, j + 1))
    };
    expm_bc(&w0.add(&w1).scale_c((0.5 * h).into()))
}

/// Integrates `dF = F Omega` over the patch, rows first when `rows_first`.
fn frames(conn: &FlatConnectionField, rows_first: bool) -> Vec<BcMat3f> {
    let n = conn.n();
    let (along, across) = if rows_first { (0, 1) } else { (1, 0) };
    let node = |s: usize, t: usize| if rows_first { (s, t) } else { (t, s) };
    let mut spine = vec![connection::base_frame()];
    for s in 0..n - 1 {
        let f = spine[s].mul(&step(conn, node(s, 0), along));
        spine.push(f);
    }
    let lines: Vec<Vec<BcMat3f>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut line = vec![spine[s]];
            for t in 0..n - 1 {
                let f = line[t].mul(&step(conn, node(s, t), across));
                line.push(f);
            }
            line
        })
        .collect();
    let mut out = vec![BcMat3f::zero(); n * n];
    for (s, line) in lines.into_iter().enumerate() {
        for (t, f) in line.into_iter().enumerate() {
            let (i, j) = node(s, t);
            out[idx(n, i, j)] = f;
        }
    }
    out
}

/// Integrates the frame of real data from `F0` at node `(0, 0)` and returns
/// `f+ = Re sigma+` and `f- = sigma-^T Q`, with `sigma` the third column.
pub fn integrate_frame(conn: &FlatConnectionField) -> Result<FrameIntegration, AffineError> {
    let imag = ambient_imag(conn);
    if imag > REALITY_TOL || !imag.is_finite() {
        return Err(AffineError::NotReal(imag));
    }
    let (rc, cr) = rayon::join(|| frames(conn, true), || frames(conn, false));
    let scale = rc.iter().map(|m| m.norm_max()).fold(1.0, f64::max);
    let path_residual = connection::max_dist(&rc, &cr) / scale;
    if path_residual > PATH_TOL || !path_residual.is_finite() {
        return Err(AffineError::PathDependent(path_residual));
    }
    let mut imaginary_part: f64 = 0.0;
    let mut fplus = Vec::with_capacity(rc.len());
    let mut fminus = Vec::with_capacity(rc.len());
    for f in &rc {
        let sp = [f.plus[0][2], f.plus[1][2], f.plus[2][2]];
        let sm = [f.minus[0][2], f.minus[1][2], f.minus[2][2]];
        for z in sp.iter().chain(&sm) {
            imaginary_part = imaginary_part.max(z.im.abs());
        }
        fplus.push(Vec3::new(sp[0].re, sp[1].re, sp[2].re));
        fminus.push(Vec3::new(sm[0].re, sm[1].re, -sm[2].re));
    }
    let n = conn.n();
    Ok(FrameIntegration {
        pair: AffinePair::new(n, 1.0 / n as f64, fplus, fminus)?,
        path_residual,
        imaginary_part,
    })
}

/// The connection with its idempotent parts exchanged.
pub fn swap_idempotents(conn: &FlatConnectionField) -> FlatConnectionField {
    let sw = |m: &BcMat3f| BcMat3f::from_parts(m.minus, m.plus);
    FlatConnectionField {
        ahat: conn.ahat.iter().map(sw).collect(),
        bhat: conn.bhat.iter().map(sw).collect(),
        chart: conn.chart.clone(),
        s2: conn.s2.clone(),
    }
}

/// Totally symmetric cubic form in coordinates, `c[i][j][k]`.
pub type Cubic = [[[f64; 2]; 2]; 2];

/// Blaschke data of a point field on interior nodes; other nodes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeData {
    /// Nodes per side.
    pub n: usize,
    /// Blaschke metric in coordinates.
    pub gb: Vec<Matrix2<f64>>,
    /// Pick form `C_ijk = g(nabla-bar_i d_j - nabla_i d_j, d_k)`, symmetrised.
    pub pick: Vec<Cubic>,
    /// Affine shape operator.
    pub shape: Vec<Matrix2<f64>>,
    /// Gaussian curvature of `gb`.
    pub curvature: Vec<f64>,
    /// `C_111 - i C_112`, the coefficient of the cubic differential.
    pub q: Vec<Complex64>,
}

/// Residuals of the affine sphere equations.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    /// Extracted data.
    pub data: BlaschkeData,
    /// `|xi - f|` per node.
    pub xi_residual: Vec<f64>,
    /// Max-abs entry of `S - Id` per node.
    pub s_residual: Vec<f64>,
    /// Transverse part of `D xi`, zero for an equiaffine normal.
    pub equiaffine_residual: Vec<f64>,
    /// Max-abs asymmetry of the raw fit before symmetrisation; `O(h^2)`.
    pub pick_asymmetry: f64,
    /// Max-abs of `g^ij C_ijk`.
    pub apolarity: f64,
}

impl StructureReport {
    /// Interior maximum of a per-node residual.
    pub fn max(&self, v: &[f64]) -> f64 {
        interior_max(v, self.data.n, MARGIN)
    }
}

fn cols(a: &Vec3, b: &Vec3, c: &Vec3) -> Matrix3<f64> {
    Matrix3::from_columns(&[*a, *b, *c])
}

/// Average of a 2-index-symmetric cubic form over the three index slots.
fn symmetrize(c: &Cubic) -> Cubic {
    let mut out = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..2 {
                out[a][b][m] = (c[a][b][m] + c[a][m][b] + c[m][b][a]) / 3.0;
            }
        }
    }
    out
}

/// Fits `D_X f_*Y = f_*(nabla-bar_X Y) + g_B(X, Y) xi` on interior nodes.
pub fn structure_residuals(f: &[Vec3], n: usize, h: f64) -> Result<StructureReport, AffineError> {
    if f.len() != n * n {
        return Err(AffineError::SizeMismatch(f.len(), n * n));
    }
    let nan2 = Matrix2::from_element(f64::NAN);
    // Layer 1: frame, transverse form h_f relative to f, connection coefficients.
    struct L1 {
        frame: Matrix3<f64>,
        g: Matrix2<f64>,
        hf: Matrix2<f64>,
        gam: [[Vector2<f64>; 2]; 2],
        phi: f64,
    }
    let mut l1: Vec<Option<L1>> = (0..n * n).map(|_| None).collect();
    let work: Vec<(usize, Result<L1, AffineError>)> = interior(n, 1)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| {
            let k = idx(n, i, j);
            let (fx, fy) = d1(f, n, h, i, j);
            let fxx = (f[idx(n, i + 1, j)] - 2.0 * f[k] + f[idx(n, i - 1, j)]) / (h * h);
            let fyy = (f[idx(n, i, j + 1)] - 2.0 * f[k] + f[idx(n, i, j - 1)]) / (h * h);
            let fxy = (f[idx(n, i + 1, j + 1)] - f[idx(n, i + 1, j - 1)] - f[idx(n, i - 1, j + 1)]
                + f[idx(n, i - 1, j - 1)])
                / (4.0 * h * h);
            let frame = cols(&fx, &fy, &f[k]);
            let det = frame.determinant();
            let scale = fx.norm() * fy.norm() * f[k].norm();
            if det.abs() < FRAME_DET_TOL * scale.max(1.0) {
                return (k, Err(AffineError::DegenerateFrame(det.abs())));
            }
            let lu = frame.lu();
            let sol = |v: &Vec3| lu.solve(v).expect("frame is invertible");
            let (sxx, sxy, syy) = (sol(&fxx), sol(&fxy), sol(&fyy));
            let hf = Matrix2::new(sxx[2], sxy[2], sxy[2], syy[2]);
            let dh = hf.determinant();
            if dh <= 0.0 {
                return (k, Err(AffineError::Indefinite(dh)));
            }
            let phi = (dh / (det * det)).powf(0.25);
            let v2 = |s: &Vec3| Vector2::new(s[0], s[1]);
            let gam = [[v2(&sxx), v2(&sxy)], [v2(&sxy), v2(&syy)]];
            (
                k,
                Ok(L1 {
                    frame,
                    g: hf / phi,
                    hf,
                    gam,
                    phi,
                }),
            )
        })
        .collect();
    for (k, r) in work {
        l1[k] = Some(r?);
    }
    let get1 = |i: usize, j: usize| l1[idx(n, i, j)].as_ref().expect("layer 1 node");
    // Layer 2: affine normal, Levi-Civita and induced connections, Pick form.
    let mut xi = vec![Vec3::from_element(f64::NAN); n * n];
    let mut lc: Vec<[[Vector2<f64>; 2]; 2]> = vec![[[Vector2::from_element(f64::NAN); 2]; 2]; n * n];
    let mut pick = vec![[[[f64::NAN; 2]; 2]; 2]; n * n];
    let mut q = vec![Complex64::new(f64::NAN, f64::NAN); n * n];
    let mut xi_residual = vec![f64::NAN; n * n];
    let mut pick_asymmetry: f64 = 0.0;
    let mut apolarity: f64 = 0.0;
    for (i, j) in interior(n, 2) {
        let k = idx(n, i, j);
        let c = get1(i, j);
        let dphi = Vector2::new(
            (get1(i + 1, j).phi - get1(i - 1, j).phi) / (2.0 * h),
            (get1(i, j + 1).phi - get1(i, j - 1).phi) / (2.0 * h),
        );
        let dg = [
            (get1(i + 1, j).g - get1(i - 1, j).g) / (2.0 * h),
            (get1(i, j + 1).g - get1(i, j - 1).g) / (2.0 * h),
        ];
        let z = -c.hf.try_inverse().expect("definite") * dphi;
        let fx = c.frame.column(0).into_owned();
        let fy = c.frame.column(1).into_owned();
        xi[k] = c.phi * f[k] + z[0] * fx + z[1] * fy;
        xi_residual[k] = (xi[k] - f[k]).norm();
        let gi = c.g.try_inverse().expect("definite");
        let mut gamma_lc = [[Vector2::zeros(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let lower = Vector2::from_fn(|l, _| 0.5 * (dg[a][(b, l)] + dg[b][(a, l)] - dg[l][(a, b)]));
                gamma_lc[a][b] = gi * lower;
            }
        }
        lc[k] = gamma_lc;
        let mut ck = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let bar = c.gam[a][b] - c.g[(a, b)] * z;
                let diff = bar - gamma_lc[a][b];
                let low = c.g * diff;
                for m in 0..2 {
                    ck[a][b][m] = low[m];
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                for m in 0..2 {
                    let v = ck[a][b][m];
                    pick_asymmetry = pick_asymmetry.max((v - ck[b][a][m]).abs()).max((v - ck[a][m][b]).abs());
                }
            }
        }
        ck = symmetrize(&ck);
        for a in 0..2 {
            let tr = gi[(0, 0)] * ck[0][0][a] + 2.0 * gi[(0, 1)] * ck[0][1][a] + gi[(1, 1)] * ck[1][1][a];
            apolarity = apolarity.max(tr.abs());
        }
        pick[k] = ck;
        q[k] = Complex64::new(ck[0][0][0], -ck[0][0][1]);
    }
    // Layer 3: shape operator and curvature.
    let mut shape = vec![nan2; n * n];
    let mut curvature = vec![f64::NAN; n * n];
    let mut s_residual = vec![f64::NAN; n * n];
    let mut equiaffine_residual = vec![f64::NAN; n * n];
    for (i, j) in interior(n, MARGIN) {
        let k = idx(n, i, j);
        let c = get1(i, j);
        let lu = c.frame.lu();
        let (xx, xy) = d1(&xi, n, h, i, j);
        let (sx, sy) = (lu.solve(&xx).expect("frame"), lu.solve(&xy).expect("frame"));
        let s = Matrix2::new(sx[0], sy[0], sx[1], sy[1]);
        shape[k] = s;
        s_residual[k] = (s - Matrix2::identity()).abs().max();
        equiaffine_residual[k] = sx[2].abs().max(sy[2].abs());
        let dgam = |dir: usize, a: usize, b: usize| -> Vector2<f64> {
            let (p, m) = if dir == 0 {
                (idx(n, i + 1, j), idx(n, i - 1, j))
            } else {
                (idx(n, i, j + 1), idx(n, i, j - 1))
            };
            (lc[p][a][b] - lc[m][a][b]) / (2.0 * h)
        };
        let g = &lc[k];
        // R(d1, d2) d2 = d1 G_22 - d2 G_12 + G_1m G^m_22 - G_2m G^m_12.
        let mut r = dgam(0, 1, 1) - dgam(1, 0, 1);
        for m in 0..2 {
            r += g[0][m] * g[1][1][m] - g[1][m] * g[0][1][m];
        }
        let gm = c.g;
        curvature[k] = (gm.row(0) * r)[0] / gm.determinant();
    }
    Ok(StructureReport {
        data: BlaschkeData {
            n,
            gb: (0..n * n)
                .map(|k| l1[k].as_ref().map_or(nan2, |c| c.g))
                .collect(),
            pick,
            shape,
            curvature,
            q,
        },
        xi_residual,
        s_residual,
        equiaffine_residual,
        pick_asymmetry,
        apolarity,
    })
}

/// `||C||_g^2 / 4`, the squared norm of the cubic differential for conformal `g`.
pub fn cubic_differential_norm2(g: &Matrix2<f64>, c: &Cubic) -> f64 {
    let gi = match g.try_inverse() {
        Some(m) => m,
        None => return f64::NAN,
    };
    let mut s = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..2 {
                for a2 in 0..2 {
                    for b2 in 0..2 {
                        for m2 in 0..2 {
                            s += gi[(a, a2)] * gi[(b, b2)] * gi[(m, m2)] * c[a][b][m] * c[a2][b2][m2];
                        }
                    }
                }
            }
        }
    }
    s / 4.0
}

/// `K_gB - 2 ||q||^2_gB + 1` per node (NaN outside the interior).
pub fn pick_and_wang(data: &BlaschkeData) -> Vec<f64> {
    (0..data.n * data.n)
        .map(|k| (data.curvature[k] - 2.0 * cubic_differential_norm2(&data.gb[k], &data.pick[k]) + 1.0).abs())
        .collect()
}

/// Largest `|q(f+) + q(f-)|` over the interior.
pub fn pick_sum(plus: &BlaschkeData, minus: &BlaschkeData) -> f64 {
    let v: Vec<f64> = plus.q.iter().zip(&minus.q).map(|(a, b)| (a + b).norm()).collect();
    interior_max(&v, plus.n, MARGIN)
}

/// Largest entry of `gB - lambda Id` over the interior, with `lambda` a real field.
pub fn blaschke_vs_metric(data: &BlaschkeData, lambda: &Field) -> f64 {
    let v: Vec<f64> = data
        .gb
        .iter()
        .zip(lambda.data())
        .map(|(g, l)| (g - Matrix2::identity() * l.re).abs().max())
        .collect();
    interior_max(&v, data.n, MARGIN)
}

/// Real Hitchin-locus data for the second variation: the metric
/// `lambda |dz|^2` with `lambda = 2 e^{2 psi}` and the cubic form `Re(U dz^3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondVariationData {
    /// Real conformal factor.
    pub psi: Field,
    /// Cubic differential coefficient.
    pub u: Field,
}

impl SecondVariationData {
    /// From a Gauss solution with cubic coefficient `alpha`: `U = 2 alpha`.
    pub fn from_gauss(psi: &Field, alpha: &Field) -> Self {
        Self {
            psi: psi.map(|z| z.re.into()),
            u: alpha.scale_re(2.0),
        }
    }
}

/// A tangent field by its components in the orthonormal frame
/// `e1 = d/dx / sqrt(lambda)`, `e2 = d/dy / sqrt(lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    /// `g(Z, e1)`.
    pub z1: Field,
    /// `g(Z, e2)`.
    pub z2: Field,
}

/// The three parts of `tr T_{PZ}` per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondVariation {
    /// `tr R(PZ, ., PZ, .)`.
    pub curvature: Vec<f64>,
    /// `-tr g(B_PZ ., B_PZ .)`.
    pub shape: Vec<f64>,
    /// `tr g_N(nabla^N PZ, nabla^N PZ) = -|nabla Z|^2`.
    pub normal: Vec<f64>,
    /// Sum of the three.
    pub total: Vec<f64>,
}

type Model = [f64; 4];

fn model_g(a: &Model, b: &Model) -> Complex64 {
    (a[0] * b[0] + a[1] * b[1] - a[2] * b[2] - a[3] * b[3]).into()
}

fn model_p(a: &Model) -> Model {
    [a[2], a[3], a[0], a[1]]
}

/// `tr_g R(PZ, e_i, PZ, e_i)` for unit-frame components `z`, from the
/// constant para-holomorphic curvature tensor on `T + P T`.
pub fn curvature_part(z: [f64; 2]) -> f64 {
    let pz = model_p(&[z[0], z[1], 0.0, 0.0]);
    let e = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
    e.iter()
        .map(|ei| chtau::riemann_constant(chtau::PARA_HOLO_CURVATURE, model_g, model_p, &pz, ei, &pz, ei).re)
        .sum()
}

/// `tr_g T_{PZ}` split into curvature, shape and normal parts.
pub fn second_variation_trace(z: &TangentField, data: &SecondVariationData) -> SecondVariation {
    let n = data.psi.n();
    let (z1x, z1y, z2x, z2y) = (grid::dx(&z.z1), grid::dy(&z.z1), grid::dx(&z.z2), grid::dy(&z.z2));
    let (px, py) = (grid::dx(&data.psi), grid::dy(&data.psi));
    let mut out = SecondVariation {
        curvature: vec![0.0; n * n],
        shape: vec![0.0; n * n],
        normal: vec![0.0; n * n],
        total: vec![0.0; n * n],
    };
    for k in 0..n * n {
        let (i, j) = (k % n, k / n);
        let zz = [z.z1.at(i, j).re, z.z2.at(i, j).re];
        let lambda = 2.0 * (2.0 * data.psi.at(i, j).re).exp();
        let u = data.u.at(i, j);
        // Re(U dz^3) on unit vectors.
        let s = lambda.powf(-1.5);
        let c111 = u.re * s;
        let c112 = -u.im * s;
        let cf = |a: usize, b: usize, m: usize| {
            let ny = (a == 1) as u8 + (b == 1) as u8 + (m == 1) as u8;
            match ny {
                0 => c111,
                1 => c112,
                2 => -c111,
                _ => -c112,
            }
        };
        let mut shape = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let v: f64 = (0..2).map(|m| zz[m] * cf(a, m, b)).sum();
                shape -= v * v;
            }
        }
        // Connection form of the unit frame: omega = -u_y dx + u_x dy, u = log sqrt(lambda).
        let (ux, uy) = (px.at(i, j).re, py.at(i, j).re);
        let om = [-uy, ux];
        let d = [[z1x.at(i, j).re, z1y.at(i, j).re], [z2x.at(i, j).re, z2y.at(i, j).re]];
        let mut normal = 0.0;
        for dir in 0..2 {
            let c1 = d[0][dir] - om[dir] * zz[1];
            let c2 = d[1][dir] + om[dir] * zz[0];
            normal -= (c1 * c1 + c2 * c2) / lambda;
        }
        let curv = curvature_part(zz);
        out.curvature[k] = curv;
        out.shape[k] = shape;
        out.normal[k] = normal;
        out.total[k] = curv + shape + normal;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::assemble;
    use crate::metric::{BeltramiChart, CubicPair};
    use std::f64::consts::PI;

    fn hyperboloid(n: usize, h: f64) -> AffinePair {
        // f = (sinh r cos t, sinh r sin t, cosh r) on r in [0.5, ...], t in [0, ...].
        let mut fp = Vec::new();
        let mut fm = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (r, t) = (0.5 + i as f64 * h, j as f64 * h);
                let v = Vec3::new(r.sinh() * t.cos(), r.sinh() * t.sin(), r.cosh());
                fp.push(v);
                fm.push(Vec3::new(v[0], v[1], -v[2]));
            }
        }
        AffinePair::new(n, h, fp, fm).unwrap()
    }

    #[test]
    fn hyperboloid_is_an_affine_sphere() {
        let err = |n: usize| {
            let p = hyperboloid(n, 1.0 / n as f64);
            assert!(p.eta_defect() < 1e-12);
            let r = structure_residuals(&p.fplus, n, p.h).unwrap();
            let k: Vec<f64> = r.data.curvature.iter().map(|k| (k + 1.0).abs()).collect();
            (r.max(&r.xi_residual), r.max(&r.s_residual), r.max(&k), r.data.q[idx(n, n / 2, n / 2)].norm())
        };
        let (a, b) = (err(32), err(64));
        let h2 = 1.0 / (64.0 * 64.0);
        assert!(b.0 < 20.0 * h2 && b.1 < 20.0 * h2 && b.3 < 20.0 * h2, "{b:?}");
        let ratio = a.2 / b.2;
        assert!((3.5..4.5).contains(&ratio), "{a:?} {b:?}");
    }

    #[test]
    fn unimodular_image_keeps_blaschke_metric() {
        let n = 32;
        let p = hyperboloid(n, 1.0 / n as f64);
        let l = Matrix3::<f64>::new(1.0, 0.3, -0.2, 0.1, 0.9, 0.4, 0.0, 0.2, 1.0);
        let l = l / l.determinant().cbrt();
        let q = p.transform(&l).unwrap();
        assert!(q.eta_defect() < 1e-12);
        let a = structure_residuals(&p.fplus, n, p.h).unwrap();
        let b = structure_residuals(&q.fplus, n, q.h).unwrap();
        let k = idx(n, 16, 16);
        assert!((a.data.gb[k] - b.data.gb[k]).abs().max() < 1e-10);
        assert!((a.s_residual[k] - b.s_residual[k]).abs() < 1e-9);
    }

    fn periodic_pair(n: usize) -> AffinePair {
        let fp = (0..n * n)
            .map(|k| {
                let (x, y) = ((k % n) as f64 / n as f64, (k / n) as f64 / n as f64);
                let t = 2.0 * PI * (x + 2.0 * y);
                Vec3::new(t.cos(), t.sin(), 1.0)
            })
            .collect::<Vec<_>>();
        let fm = fp.iter().map(|v| Vec3::new(v[0], v[1], -2.0)).collect();
        AffinePair::new(n, 1.0 / n as f64, fp, fm).unwrap()
    }

    #[test]
    fn normalized_pair_has_zero_potential() {
        let p = periodic_pair(32);
        let (q, mu) = normalize_lift(&p).unwrap();
        assert!(mu.max_abs() < 1e-12);
        assert!(q.eta_defect() < 1e-12);
    }

    #[test]
    fn rescaled_pair_recovers_minus_lambda() {
        let err = |n: usize| {
            let p = periodic_pair(n);
            let lam = Field::from_fn(n, |x, y| (0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).into());
            let lam_mean = lam.mean().re;
            let mut r = p.clone();
            for (k, l) in lam.data().iter().enumerate() {
                r.fplus[k] *= l.re.exp();
                r.fminus[k] *= (-l.re).exp();
            }
            let (q, mu) = normalize_lift(&r).unwrap();
            assert!(q.eta_defect() < 1e-12);
            mu.data()
                .iter()
                .zip(lam.data())
                .map(|(m, l)| (m.re + l.re - lam_mean).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn injected_curl_is_rejected() {
        let n = 32;
        let eps = 0.05;
        let fp: Vec<Vec3> = (0..n * n)
            .map(|k| {
                let x = (k % n) as f64 / n as f64;
                Vec3::new(eps * (2.0 * PI * x).sin() / (2.0 * PI), 0.0, 1.0)
            })
            .collect();
        let fm: Vec<Vec3> = (0..n * n)
            .map(|k| {
                let y = (k / n) as f64 / n as f64;
                let p = (2.0 * PI * y).cos();
                Vec3::new(p, 0.0, -1.0 - p * fp[k][0])
            })
            .collect();
        let pair = AffinePair::new(n, 1.0 / n as f64, fp, fm).unwrap();
        assert!(matches!(normalize_lift(&pair), Err(AffineError::NotIsotropic { .. })));
    }

    fn titeica(n: usize) -> FlatConnectionField {
        let cp = CubicPair::constant(n, 1.0.into(), 1.0.into());
        assemble(&Field::zeros(n), &cp, &BeltramiChart::flat(n)).unwrap()
    }

    #[test]
    fn constant_data_integrates_to_an_affine_sphere() {
        let n = 64;
        let fi = integrate_frame(&titeica(n)).unwrap();
        assert!(fi.path_residual < 1e-12);
        assert!(fi.imaginary_part < 1e-12);
        let p = &fi.pair;
        assert!(p.eta_defect() < 1e-12);
        assert!(p.conormal_defect() < 20.0 * p.h * p.h);
        let r = structure_residuals(&p.fplus, n, p.h).unwrap();
        let h2 = p.h * p.h;
        assert!(r.max(&r.xi_residual) < 20.0 * h2);
        assert!(r.max(&r.s_residual) < 20.0 * h2);
        assert!(r.pick_asymmetry < 20.0 * h2);
        let lambda = Field::constant(n, 2.0.into());
        assert!(blaschke_vs_metric(&r.data, &lambda) < 20.0 * h2);
        assert!(interior_max(&pick_and_wang(&r.data), n, MARGIN) < 20.0 * h2);
        let dual = structure_residuals(&p.dual().fplus, n, p.h).unwrap();
        assert!(pick_sum(&r.data, &dual.data) < 20.0 * h2);
        let q = r.data.q[idx(n, n / 2, n / 2)];
        assert!((q.norm() - 2.0).abs() < 20.0 * h2, "{q}");
    }

    #[test]
    fn swapping_idempotents_exchanges_the_pair() {
        let n = 16;
        let conn = titeica(n);
        let a = integrate_frame(&conn).unwrap().pair;
        let b = integrate_frame(&swap_idempotents(&conn)).unwrap().pair;
        let d = a.dual();
        for k in 0..n * n {
            assert!((b.fplus[k] - d.fplus[k]).norm() < 1e-12);
            assert!((b.fminus[k] - d.fminus[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_data_is_rejected_as_not_real() {
        let n = 16;
        let cp = CubicPair::constant(n, Complex64::new(1.0, 0.5), 1.0.into());
        let conn = assemble(&Field::zeros(n), &cp, &BeltramiChart::flat(n)).unwrap();
        assert!(matches!(integrate_frame(&conn), Err(AffineError::NotReal(_))));
    }

    #[test]
    fn non_flat_data_is_path_dependent() {
        // C = 0 with psi = 0 violates the Gauss equation (no totally geodesic torus).
        let n = 32;
        let conn = assemble(&Field::zeros(n), &CubicPair::zero(n), &BeltramiChart::flat(n)).unwrap();
        assert!(matches!(integrate_frame(&conn), Err(AffineError::PathDependent(_))));
    }

    #[test]
    fn curvature_part_matches_closed_form() {
        for z in [[1.0, 0.0], [0.3, -0.7], [2.0, 1.5]] {
            let n2 = z[0] * z[0] + z[1] * z[1];
            assert!((curvature_part(z) - (-2.0 * n2 - 3.0 * n2)).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_field_without_cubic_form() {
        let n = 16;
        let data = SecondVariationData {
            psi: Field::zeros(n),
            u: Field::zeros(n),
        };
        let z = TangentField {
            z1: Field::constant(n, 1.0.into()),
            z2: Field::zeros(n),
        };
        let sv = second_variation_trace(&z, &data);
        for k in 0..n * n {
            assert!((sv.curvature[k] + 5.0).abs() < 1e-12);
            assert_eq!(sv.shape[k], 0.0);
            assert!(sv.normal[k].abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_field_leaves_only_normal_term() {
        let n = 32;
        let data = SecondVariationData {
            psi: Field::constant(n, 0.1.into()),
            u: Field::constant(n, 2.0.into()),
        };
        // Z supported on x < 1/2.
        let bump = |x: f64| if x < 0.5 { (2.0 * PI * x).sin().powi(4) } else { 0.0 };
        let z = TangentField {
            z1: Field::from_fn(n, |x, _| bump(x).into()),
            z2: Field::zeros(n),
        };
        let sv = second_variation_trace(&z, &data);
        for k in 0..n * n {
            let x = (k % n) as f64 / n as f64;
            if x > 0.55 && x < 0.95 {
                assert_eq!(sv.total[k], 0.0);
            }
            assert!(sv.total[k] <= 0.0);
        }
    }
}
