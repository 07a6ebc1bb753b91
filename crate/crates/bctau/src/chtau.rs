//! The bicomplex hyperbolic plane `CH2_tau`: hyperboloid and incidence models,
//! the para-Hermitian structure on tangent spaces, curvature, real forms and
//! boundary flags.
//!
//! Points are classes of `z` in `C_tau^3` with `q(z, z) = -1`, where
//! `q(z, w) = z^T Q tau_conj(w)` and `Q = diag(1, 1, -1)`, modulo unit
//! para-complex scalars `u = cosh v + tau sinh v` (idempotent parts
//! `(e^v, e^-v)`). Tangent vectors at `z` are identified with the
//! `q`-orthogonal complement of `z`. On tangent vectors `g = Re_tau q` and
//! `omega = Im_tau q`; `P` is multiplication by `tau`, `I` by `i` and `J = IP`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bicomplex::{Bicomplex, BcVec3};
use crate::{BcVec3f, Bicomplex64, CVec3f as CVec3};

/// Tolerance for `q(rep, rep) = -1` and for base-point comparisons.
pub const POINT_TOL: f64 = 1e-12;
/// Threshold below which a plane counts as isotropic.
pub const ISOTROPIC_TOL: f64 = 1e-10;
/// Tolerance of the boundary condition `phi(v) = 0`.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Orbit samples used by [`submanifold_membership`].
pub const ORBIT_SAMPLES: usize = 64;
/// Membership tolerance of the orbit scan.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Para-holomorphic sectional curvature of the model.
pub const PARA_HOLO_CURVATURE: f64 = -4.0;

/// Errors of the `CH2_tau` models.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChtauError {
    /// `q(rep, rep) != -1`.
    #[error("representative has q(z,z) + 1 = {0:e}")]
    NotOnHyperboloid(f64),
    /// `q(z, z)` is a zero divisor, so no rescaling reaches `-1`.
    #[error("q(z,z) is a zero divisor; cannot normalise")]
    NotNormalizable,
    /// Tangent vectors at different base points.
    #[error("tangent vectors have different base points")]
    BaseMismatch,
    /// The plane `span{X, PX}` is isotropic.
    #[error("isotropic plane: |g(X,X)| = {0:e}")]
    IsotropicPlane(f64),
    /// `phi(v) != 0`.
    #[error("not a boundary pair: normalised |phi(v)| = {0:e}")]
    NotOnBoundary(f64),
    /// An incidence pair with `phi(v) = 0` has no interior point.
    #[error("incidence pair has phi(v) = 0")]
    DegenerateIncidence,
}

fn q_diag(k: usize) -> f64 {
    if k == 2 {
        -1.0
    } else {
        1.0
    }
}

/// The form `q(z, w) = sum_k Q_kk z_k tau_conj(w_k)`.
pub fn q_form(z: &BcVec3f, w: &BcVec3f) -> Bicomplex64 {
    // tau_conj swaps idempotent parts, so q+ pairs z+ with w- and vice versa.
    let mut plus = Complex64::new(0.0, 0.0);
    let mut minus = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        plus += q_diag(k) * z.plus[k] * w.minus[k];
        minus += q_diag(k) * z.minus[k] * w.plus[k];
    }
    Bicomplex::from_idempotent(plus, minus)
}

fn cvec_norm(v: &CVec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A point of `CH2_tau` given by a normalised representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperboloidPoint {
    /// Representative with `q(rep, rep) = -1`.
    pub rep: BcVec3f,
}

impl HyperboloidPoint {
    /// Wraps a representative after checking `q(rep, rep) = -1`.
    pub fn new(rep: BcVec3f) -> Result<Self, ChtauError> {
        let d = (q_form(&rep, &rep) + Bicomplex::from_real(1.0)).norm_max();
        if d > POINT_TOL * rep.norm_max().powi(2).max(1.0) {
            return Err(ChtauError::NotOnHyperboloid(d));
        }
        Ok(Self { rep })
    }

    /// Rescales `z` by a bicomplex scalar so that `q(z, z) = -1`.
    pub fn normalize(z: BcVec3f) -> Result<Self, ChtauError> {
        // q(z,z) = lambda has equal idempotent parts; scale both parts by sqrt(-1/lambda).
        let lambda = q_form(&z, &z).plus();
        if lambda.norm() <= 1e-14 * z.norm_max().powi(2).max(1e-300) {
            return Err(ChtauError::NotNormalizable);
        }
        let m = (-1.0 / lambda).sqrt();
        Self::new(z.scale(Bicomplex::from_complex(m)))
    }

    /// The point `(0, 0, 1)`.
    pub fn origin() -> Self {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Self {
            rep: BcVec3::from_complex([o, o, one]),
        }
    }

    /// Acts by a bicomplex matrix preserving `q`.
    pub fn transform(&self, m: &crate::BcMat3f) -> Result<Self, ChtauError> {
        Self::new(m.apply(&self.rep))
    }

    /// Multiplies the representative by the unit `cosh v + tau sinh v`.
    pub fn unit_rescale(&self, v: Complex64) -> Self {
        let u = Bicomplex::from_idempotent(v.exp(), (-v).exp());
        Self {
            rep: self.rep.scale(u),
        }
    }
}

/// Draws a random point: a random bicomplex vector with the timelike entry
/// enlarged, then normalised.
pub fn random_point<R: Rng>(rng: &mut R) -> HyperboloidPoint {
    loop {
        let mut parts = [[Complex64::new(0.0, 0.0); 3]; 2];
        for part in parts.iter_mut() {
            for z in part.iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            part[2] += 2.0;
        }
        if let Ok(p) = HyperboloidPoint::normalize(BcVec3::from_parts(parts[0], parts[1])) {
            return p;
        }
    }
}

/// Draws a random bicomplex vector with entries in the unit box.
pub fn random_vector<R: Rng>(rng: &mut R) -> BcVec3f {
    let mut parts = [[Complex64::new(0.0, 0.0); 3]; 2];
    for part in parts.iter_mut() {
        for z in part.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    BcVec3::from_parts(parts[0], parts[1])
}

/// A point of the incidence model: `v` in `C^3`, `phi` in the dual, `phi(v) = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidencePoint {
    /// The vector.
    pub v: CVec3,
    /// The covector, as a row.
    pub phi: CVec3,
}

/// The pairing `eta(v, phi) = phi(v)`.
pub fn eta(v: &CVec3, phi: &CVec3) -> Complex64 {
    v[0] * phi[0] + v[1] * phi[1] + v[2] * phi[2]
}

/// `z = x + tau y -> (x + y, (x - y)^T Q)`, i.e. `(z+, z-^T Q)`.
pub fn to_incidence(p: &HyperboloidPoint) -> IncidencePoint {
    let m = p.rep.minus;
    IncidencePoint {
        v: p.rep.plus,
        phi: [m[0], m[1], -m[2]],
    }
}

/// Inverse of [`to_incidence`]: rescales so that `phi(v) = -1`, then sets
/// `z+ = v` and `z- = Q phi^T`.
pub fn from_incidence(ip: &IncidencePoint) -> Result<HyperboloidPoint, ChtauError> {
    let e = eta(&ip.v, &ip.phi);
    let scale = cvec_norm(&ip.v) * cvec_norm(&ip.phi);
    if e.norm() <= 1e-14 * scale.max(1e-300) {
        return Err(ChtauError::DegenerateIncidence);
    }
    let s = -1.0 / e;
    let m = [ip.phi[0] * s, ip.phi[1] * s, -ip.phi[2] * s];
    HyperboloidPoint::new(BcVec3::from_parts(ip.v, m))
}

/// A tangent vector, represented by an ambient vector `q`-orthogonal to the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    /// Base point.
    pub base: HyperboloidPoint,
    /// Ambient representative, `q(vec, base.rep) = 0`.
    pub vec: BcVec3f,
}

impl TangentVector {
    /// `P X = tau X`.
    pub fn p(&self) -> Self {
        self.scaled(Bicomplex::tau())
    }

    /// `I X = i X`.
    pub fn i(&self) -> Self {
        self.scaled(Bicomplex::i())
    }

    /// `J X = I P X`.
    pub fn j(&self) -> Self {
        self.p().i()
    }

    /// Multiplies by a bicomplex scalar.
    pub fn scaled(&self, s: Bicomplex64) -> Self {
        Self {
            base: self.base,
            vec: self.vec.scale(s),
        }
    }

    /// Sum of two tangent vectors at the same base.
    pub fn add(&self, o: &Self) -> Self {
        Self {
            base: self.base,
            vec: self.vec.add(&o.vec),
        }
    }
}

/// Splits `V = lambda rep + t` with `q(t, rep) = 0`, `lambda = -q(V, rep)`.
pub fn project_tangent(p: &HyperboloidPoint, v: &BcVec3f) -> TangentVector {
    let lambda = -q_form(v, &p.rep);
    TangentVector {
        base: *p,
        vec: v.sub(&p.rep.scale(lambda)),
    }
}

fn same_base(x: &TangentVector, y: &TangentVector) -> Result<(), ChtauError> {
    if x.base.rep.sub(&y.base.rep).norm_max() > POINT_TOL {
        return Err(ChtauError::BaseMismatch);
    }
    Ok(())
}

/// `(g(X, Y), omega(X, Y)) = (Re_tau q(X, Y), Im_tau q(X, Y))`.
///
/// With this convention `omega(X, Y) = g(PX, Y) = -g(X, PY)`.
pub fn para_hermitian_eval(
    x: &TangentVector,
    y: &TangentVector,
) -> Result<(Complex64, Complex64), ChtauError> {
    same_base(x, y)?;
    let q = q_form(&x.vec, &y.vec);
    Ok((q.re_tau(), q.im_tau()))
}

fn g(x: &TangentVector, y: &TangentVector) -> Complex64 {
    q_form(&x.vec, &y.vec).re_tau()
}

/// The Gram determinant `g(X,X) g(Y,Y) - g(X,Y)^2` of a plane.
pub fn plane_gram(x: &TangentVector, y: &TangentVector) -> Complex64 {
    g(x, x) * g(y, y) - g(x, y) * g(x, y)
}

/// Sectional curvature from the submersion of the quadric `q = -1` (curvature
/// `-1`) onto `CH2_tau` with fibres tangent to `tau z`:
/// `K(X, Y) = -1 + 3 omega(X, Y)^2 / Gram(X, Y)`.
pub fn sectional_submersion(x: &TangentVector, y: &TangentVector) -> Result<Complex64, ChtauError> {
    same_base(x, y)?;
    let gram = plane_gram(x, y);
    if gram.norm() <= ISOTROPIC_TOL {
        return Err(ChtauError::IsotropicPlane(gram.norm()));
    }
    let w = q_form(&x.vec, &y.vec).im_tau();
    Ok(-1.0 + 3.0 * w * w / gram)
}

/// Riemann tensor of a para-Kaehler metric of constant para-holomorphic
/// sectional curvature `k`, with `Sec(X, Y) = R(X, Y, Y, X) / Gram(X, Y)`.
pub fn riemann_constant<V>(
    k: f64,
    g: impl Fn(&V, &V) -> Complex64,
    p: impl Fn(&V) -> V,
    x: &V,
    y: &V,
    z: &V,
    w: &V,
) -> Complex64 {
    let (pz, py, px) = (p(z), p(y), p(x));
    let bracket = g(x, z) * g(y, w) - g(y, z) * g(x, w) + g(x, &pz) * g(&py, w)
        - g(y, &pz) * g(&px, w)
        + 2.0 * g(x, &py) * g(&pz, w);
    -(k / 4.0) * bracket
}

/// Sectional curvature of `CH2_tau` from [`riemann_constant`] with `k = -4`.
pub fn sectional_riemann(x: &TangentVector, y: &TangentVector) -> Result<Complex64, ChtauError> {
    same_base(x, y)?;
    let gram = plane_gram(x, y);
    if gram.norm() <= ISOTROPIC_TOL {
        return Err(ChtauError::IsotropicPlane(gram.norm()));
    }
    let r = riemann_constant(PARA_HOLO_CURVATURE, g, |v: &TangentVector| v.p(), x, y, y, x);
    Ok(r / gram)
}

/// Para-holomorphic sectional curvature `K(X, PX)` at `p`, from the submersion
/// formula; equal to `-4` on every non-isotropic plane.
pub fn para_holo_sectional(p: &HyperboloidPoint, x: &TangentVector) -> Result<Complex64, ChtauError> {
    if x.base.rep.sub(&p.rep).norm_max() > POINT_TOL {
        return Err(ChtauError::BaseMismatch);
    }
    let gxx = g(x, x);
    if gxx.norm() <= ISOTROPIC_TOL {
        return Err(ChtauError::IsotropicPlane(gxx.norm()));
    }
    sectional_submersion(x, &x.p())
}

/// Real forms of `CH2_tau` detected by [`submanifold_membership`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Submanifold {
    /// `H2_tau`: a representative in `R_tau^3` (both idempotent parts real).
    H2Tau,
    /// `CH2`: a representative in `(R + i tau R)^3` (`z- = conj(z+)`).
    CH2,
    /// `X`: a representative in `C^3` (`z- = z+`).
    X,
    /// None of the above.
    Generic,
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimises a defect over `Im v` on [`ORBIT_SAMPLES`] samples, then refines
/// around the best sample by golden-section search.
fn orbit_scan(defect: &dyn Fn(f64) -> f64) -> f64 {
    let step = 2.0 * std::f64::consts::PI / ORBIT_SAMPLES as f64;
    let (mut best_b, mut best) = (0.0, f64::INFINITY);
    for k in 0..ORBIT_SAMPLES {
        let b = k as f64 * step;
        let d = defect(b);
        if d < best {
            best = d;
            best_b = b;
        }
    }
    let (_, refined) = golden_min(defect, best_b - step, best_b + step);
    best.min(refined)
}

fn rel_dist(a: &CVec3, b: &CVec3) -> f64 {
    let d: CVec3 = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    cvec_norm(&d) / cvec_norm(a).max(cvec_norm(b)).max(1e-300)
}

/// Orbit-scan defects `(H2tau, CH2, X)` of a point; each is zero iff some
/// unit multiple `(e^v z+, e^-v z-)` lies in the corresponding real form.
/// `Re v` is fixed in closed form from the norm ratio, `Im v` is scanned.
pub fn membership_defects(p: &HyperboloidPoint) -> [f64; 3] {
    let (zp, zm) = (p.rep.plus, p.rep.minus);
    let (np, nm) = (cvec_norm(&zp), cvec_norm(&zm));
    // Re v scaling is irrelevant to reality of each part.
    let h2 = orbit_scan(&|b: f64| {
        let (ep, em) = (Complex64::from_polar(1.0, b), Complex64::from_polar(1.0, -b));
        let ip: f64 = zp.iter().map(|z| (z * ep).im.powi(2)).sum::<f64>().sqrt() / np;
        let im: f64 = zm.iter().map(|z| (z * em).im.powi(2)).sum::<f64>().sqrt() / nm;
        ip + im
    });
    // conj(e^v z+) = e^-v z-  <=>  z- = e^{2 Re v} conj(z+); Im v drops out.
    let ratio = nm / np;
    let ch2 = orbit_scan(&|_b: f64| {
        let target: CVec3 = zp.map(|z| z.conj() * ratio);
        rel_dist(&zm, &target)
    });
    // e^v z+ = e^-v z-  <=>  z- = e^{2v} z+.
    let x = orbit_scan(&|b: f64| {
        let f = Complex64::from_polar(ratio, 2.0 * b);
        let target: CVec3 = zp.map(|z| z * f);
        rel_dist(&zm, &target)
    });
    [h2, ch2, x]
}

/// Real forms containing the point, by orbit scan with tolerance
/// [`MEMBERSHIP_TOL`]; `{Generic}` when none applies.
pub fn submanifold_membership(p: &HyperboloidPoint) -> BTreeSet<Submanifold> {
    let d = membership_defects(p);
    let tags = [Submanifold::H2Tau, Submanifold::CH2, Submanifold::X];
    let mut out: BTreeSet<_> = tags
        .iter()
        .zip(d.iter())
        .filter(|(_, &d)| d <= MEMBERSHIP_TOL)
        .map(|(t, _)| *t)
        .collect();
    if out.is_empty() {
        out.insert(Submanifold::Generic);
    }
    out
}

/// True when two representatives differ by a unit para-complex scalar, found
/// by the same orbit scan.
pub fn same_point(a: &HyperboloidPoint, b: &HyperboloidPoint) -> bool {
    let (ap, am) = (a.rep.plus, a.rep.minus);
    let (bp, bm) = (b.rep.plus, b.rep.minus);
    let ratio = (cvec_norm(&bp) / cvec_norm(&ap)).ln();
    let defect = orbit_scan(&|t: f64| {
        let v = Complex64::new(ratio, t);
        let (ep, em) = (v.exp(), (-v).exp());
        rel_dist(&ap.map(|z| z * ep), &bp) + rel_dist(&am.map(|z| z * em), &bm)
    });
    defect <= MEMBERSHIP_TOL
}

/// A complete flag in `C^3`: a line inside a plane given by its covector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    /// Spanning vector of the line.
    pub line: CVec3,
    /// Covector whose kernel is the plane.
    pub plane: CVec3,
}

/// Boundary map `(v, phi) -> ([v], ker phi)`, requiring `phi(v) = 0`.
pub fn boundary_flag(v: &CVec3, phi: &CVec3) -> Result<Flag, ChtauError> {
    let scale = cvec_norm(v) * cvec_norm(phi);
    if scale == 0.0 {
        return Err(ChtauError::NotOnBoundary(f64::INFINITY));
    }
    let rel = eta(v, phi).norm() / scale;
    if rel > BOUNDARY_TOL {
        return Err(ChtauError::NotOnBoundary(rel));
    }
    Ok(Flag {
        line: *v,
        plane: *phi,
    })
}

/// Orthonormal (Hermitian) basis of `ker phi = {u : phi(u) = 0}`.
pub fn plane_basis(phi: &CVec3) -> [CVec3; 2] {
    let n: CVec3 = phi.map(|z| z.conj());
    let nn = cvec_norm(&n);
    let n: CVec3 = n.map(|z| z / nn);
    let mut basis: Vec<CVec3> = Vec::with_capacity(2);
    // Gram-Schmidt on the standard basis, dropping the most parallel vector.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| n[a].norm().partial_cmp(&n[b].norm()).unwrap());
    for &k in order.iter().take(2) {
        let mut u = [Complex64::new(0.0, 0.0); 3];
        u[k] = Complex64::new(1.0, 0.0);
        for e in std::iter::once(&n).chain(basis.iter()) {
            let c: Complex64 = (0..3).map(|i| e[i].conj() * u[i]).sum();
            for i in 0..3 {
                u[i] -= c * e[i];
            }
        }
        let un = cvec_norm(&u);
        basis.push(u.map(|z| z / un));
    }
    [basis[0], basis[1]]
}

/// `|det[line1; basis of plane2]|` with a unit line vector and an orthonormal
/// plane basis; zero iff `line1` lies in `plane2`.
pub fn line_plane_transversality(line: &CVec3, plane: &CVec3) -> f64 {
    let ln = cvec_norm(line);
    let l = line.map(|z| z / ln);
    let [b1, b2] = plane_basis(plane);
    crate::mat3::det(&[l, b1, b2]).norm()
}
