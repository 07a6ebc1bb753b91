//! Bicomplex numbers `C_tau = C[tau]/(tau^2 - 1)`, bicomplex 3-vectors and 3x3
//! matrices, and the isomorphism `Phi: GL(3,C) -> SU(2,1)_tau`.
//!
//! A bicomplex number `z1 + tau z2` is stored in its `(1, tau)` form. The
//! idempotent form `(z1 + z2) e+ + (z1 - z2) e-` with `e+- = (1 +- tau)/2` is
//! two additions away and is computed on demand. Products are componentwise
//! in the idempotent form. Vectors and matrices are stored directly in
//! idempotent form because they are used in hot loops.
//!
//! The arithmetic here is generic over [`num_traits::Float`]; the crate root
//! exposes `f64` aliases.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};

use crate::mat3::{self, CMat3, CVec3};

/// Relative threshold below which an idempotent part counts as zero.
pub const ZERO_DIVISOR_TOL: f64 = 1e-14;

/// Errors raised by bicomplex arithmetic and by `Phi`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    /// One idempotent part vanishes, so the element has no inverse.
    #[error("zero divisor: idempotent parts have moduli {plus:e} and {minus:e}")]
    ZeroDivisor { plus: f64, minus: f64 },
    /// The matrix is singular (relative determinant below tolerance).
    #[error("singular matrix: relative |det| = {0:e}")]
    Singular(f64),
    /// The bicomplex matrix violates `X- = Q (X+^-1)^T Q`.
    #[error("matrix is not in the image of Phi: compatibility defect {0:e}")]
    NotInImage(f64),
}

fn two<T: Float>() -> T {
    T::one() + T::one()
}

fn czero<T: Float>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn to_f64<T: Float>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A bicomplex number `z1 + tau z2` with `tau^2 = 1` commuting with `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bicomplex<T> {
    /// The `1`-component.
    pub z1: Complex<T>,
    /// The `tau`-component.
    pub z2: Complex<T>,
}

impl<T: Float> Bicomplex<T> {
    /// Builds `z1 + tau z2`.
    pub fn new(z1: Complex<T>, z2: Complex<T>) -> Self {
        Self { z1, z2 }
    }

    /// Embeds a complex number (zero `tau`-part).
    pub fn from_complex(z: Complex<T>) -> Self {
        Self { z1: z, z2: czero() }
    }

    /// Embeds a real number.
    pub fn from_real(x: T) -> Self {
        Self::from_complex(Complex::new(x, T::zero()))
    }

    /// Builds `plus e+ + minus e-` from its idempotent parts.
    pub fn from_idempotent(plus: Complex<T>, minus: Complex<T>) -> Self {
        let h = T::one() / two::<T>();
        Self {
            z1: (plus + minus) * h,
            z2: (plus - minus) * h,
        }
    }

    /// The unit `tau`.
    pub fn tau() -> Self {
        Self {
            z1: czero(),
            z2: Complex::new(T::one(), T::zero()),
        }
    }

    /// The imaginary unit `i`.
    pub fn i() -> Self {
        Self::from_complex(Complex::new(T::zero(), T::one()))
    }

    /// The idempotent `e+ = (1 + tau)/2`.
    pub fn e_plus() -> Self {
        Self::from_idempotent(Complex::new(T::one(), T::zero()), czero())
    }

    /// The idempotent `e- = (1 - tau)/2`.
    pub fn e_minus() -> Self {
        Self::from_idempotent(czero(), Complex::new(T::one(), T::zero()))
    }

    /// The `e+` part `z1 + z2`.
    pub fn plus(&self) -> Complex<T> {
        self.z1 + self.z2
    }

    /// The `e-` part `z1 - z2`.
    pub fn minus(&self) -> Complex<T> {
        self.z1 - self.z2
    }

    /// `Re_tau`, the `1`-component.
    pub fn re_tau(&self) -> Complex<T> {
        self.z1
    }

    /// `Im_tau`, the `tau`-component.
    pub fn im_tau(&self) -> Complex<T> {
        self.z2
    }

    /// Para-complex conjugation `z1 + tau z2 -> z1 - tau z2`. It swaps the
    /// idempotent parts.
    pub fn tau_conj(&self) -> Self {
        Self {
            z1: self.z1,
            z2: -self.z2,
        }
    }

    /// Complex conjugation of both components (`i -> -i`, `tau` fixed).
    pub fn conj(&self) -> Self {
        Self {
            z1: self.z1.conj(),
            z2: self.z2.conj(),
        }
    }

    /// The para-norm `x tau_conj(x) = z1^2 - z2^2`, a complex number.
    pub fn tau_norm(&self) -> Complex<T> {
        self.z1 * self.z1 - self.z2 * self.z2
    }

    /// Multiplicative inverse, or [`AlgebraError::ZeroDivisor`] when an
    /// idempotent part vanishes relative to the element's size.
    pub fn invert(&self) -> Result<Self, AlgebraError> {
        let (p, m) = (self.plus(), self.minus());
        let scale = T::one().max(p.norm()).max(m.norm());
        let tol = T::from(ZERO_DIVISOR_TOL).unwrap() * scale;
        if p.norm() <= tol || m.norm() <= tol {
            return Err(AlgebraError::ZeroDivisor {
                plus: to_f64(p.norm()),
                minus: to_f64(m.norm()),
            });
        }
        let one = Complex::new(T::one(), T::zero());
        Ok(Self::from_idempotent(one / p, one / m))
    }

    /// Exponential, computed on the idempotent parts.
    pub fn exp(&self) -> Self {
        Self::from_idempotent(self.plus().exp(), self.minus().exp())
    }

    /// Multiplies by a real scalar.
    pub fn scale(&self, s: T) -> Self {
        Self {
            z1: self.z1 * s,
            z2: self.z2 * s,
        }
    }

    /// Multiplies by a complex scalar.
    pub fn scale_c(&self, s: Complex<T>) -> Self {
        Self {
            z1: self.z1 * s,
            z2: self.z2 * s,
        }
    }

    /// Largest modulus of the two idempotent parts.
    pub fn norm_max(&self) -> T {
        self.plus().norm().max(self.minus().norm())
    }

    /// `norm_max(self - other)`.
    pub fn dist(&self, other: &Self) -> T {
        (*self - *other).norm_max()
    }
}

impl<T: Float> Add for Bicomplex<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            z1: self.z1 + o.z1,
            z2: self.z2 + o.z2,
        }
    }
}

impl<T: Float> Sub for Bicomplex<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            z1: self.z1 - o.z1,
            z2: self.z2 - o.z2,
        }
    }
}

impl<T: Float> Neg for Bicomplex<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            z1: -self.z1,
            z2: -self.z2,
        }
    }
}

impl<T: Float> Mul for Bicomplex<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            z1: self.z1 * o.z1 + self.z2 * o.z2,
            z2: self.z1 * o.z2 + self.z2 * o.z1,
        }
    }
}

impl<T: Float> Zero for Bicomplex<T> {
    fn zero() -> Self {
        Self::from_complex(czero())
    }
    fn is_zero(&self) -> bool {
        self.z1.is_zero() && self.z2.is_zero()
    }
}

impl<T: Float> One for Bicomplex<T> {
    fn one() -> Self {
        Self::from_real(T::one())
    }
}

/// A vector in `C_tau^3`, stored by idempotent parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcVec3<T> {
    /// The `e+` part.
    pub plus: CVec3<T>,
    /// The `e-` part.
    pub minus: CVec3<T>,
}

impl<T: Float> BcVec3<T> {
    /// Builds a vector from its idempotent parts.
    pub fn from_parts(plus: CVec3<T>, minus: CVec3<T>) -> Self {
        Self { plus, minus }
    }

    /// Builds a vector from bicomplex entries.
    pub fn from_entries(e: [Bicomplex<T>; 3]) -> Self {
        Self {
            plus: [e[0].plus(), e[1].plus(), e[2].plus()],
            minus: [e[0].minus(), e[1].minus(), e[2].minus()],
        }
    }

    /// Embeds a complex vector with zero `tau`-part.
    pub fn from_complex(v: CVec3<T>) -> Self {
        Self { plus: v, minus: v }
    }

    /// The `k`-th entry as a bicomplex number.
    pub fn entry(&self, k: usize) -> Bicomplex<T> {
        Bicomplex::from_idempotent(self.plus[k], self.minus[k])
    }

    /// All entries.
    pub fn entries(&self) -> [Bicomplex<T>; 3] {
        [self.entry(0), self.entry(1), self.entry(2)]
    }

    /// Entrywise para-complex conjugation (swaps the parts).
    pub fn tau_conj(&self) -> Self {
        Self {
            plus: self.minus,
            minus: self.plus,
        }
    }

    /// Multiplies by a bicomplex scalar.
    pub fn scale(&self, s: Bicomplex<T>) -> Self {
        let (sp, sm) = (s.plus(), s.minus());
        Self {
            plus: self.plus.map(|x| x * sp),
            minus: self.minus.map(|x| x * sm),
        }
    }

    /// Entrywise sum.
    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for k in 0..3 {
            r.plus[k] = r.plus[k] + o.plus[k];
            r.minus[k] = r.minus[k] + o.minus[k];
        }
        r
    }

    /// Entrywise difference.
    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        for k in 0..3 {
            r.plus[k] = r.plus[k] - o.plus[k];
            r.minus[k] = r.minus[k] - o.minus[k];
        }
        r
    }

    /// Largest modulus over all idempotent components.
    pub fn norm_max(&self) -> T {
        let mut m = T::zero();
        for k in 0..3 {
            m = m.max(self.plus[k].norm()).max(self.minus[k].norm());
        }
        m
    }
}

/// A 3x3 bicomplex matrix, stored by idempotent parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcMat3<T> {
    /// The `e+` part.
    pub plus: CMat3<T>,
    /// The `e-` part.
    pub minus: CMat3<T>,
}

impl<T: Float> BcMat3<T> {
    /// The zero matrix.
    pub fn zero() -> Self {
        Self {
            plus: mat3::zero(),
            minus: mat3::zero(),
        }
    }

    /// The identity matrix.
    pub fn identity() -> Self {
        Self {
            plus: mat3::identity(),
            minus: mat3::identity(),
        }
    }

    /// Builds a matrix from its idempotent parts.
    pub fn from_parts(plus: CMat3<T>, minus: CMat3<T>) -> Self {
        Self { plus, minus }
    }

    /// Embeds a complex matrix with zero `tau`-part.
    pub fn from_complex(m: CMat3<T>) -> Self {
        Self { plus: m, minus: m }
    }

    /// Builds a matrix from bicomplex entries.
    pub fn from_entries(e: &[[Bicomplex<T>; 3]; 3]) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.plus[i][j] = e[i][j].plus();
                r.minus[i][j] = e[i][j].minus();
            }
        }
        r
    }

    /// Entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Bicomplex<T> {
        Bicomplex::from_idempotent(self.plus[i][j], self.minus[i][j])
    }

    /// Sets entry `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: Bicomplex<T>) {
        self.plus[i][j] = v.plus();
        self.minus[i][j] = v.minus();
    }

    /// All entries.
    pub fn entries(&self) -> [[Bicomplex<T>; 3]; 3] {
        let mut e = [[Bicomplex::zero(); 3]; 3];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.entry(i, j);
            }
        }
        e
    }

    /// Matrix product.
    pub fn mul(&self, o: &Self) -> Self {
        Self {
            plus: mat3::mul(&self.plus, &o.plus),
            minus: mat3::mul(&self.minus, &o.minus),
        }
    }

    /// Entrywise sum.
    pub fn add(&self, o: &Self) -> Self {
        Self {
            plus: mat3::add(&self.plus, &o.plus),
            minus: mat3::add(&self.minus, &o.minus),
        }
    }

    /// Entrywise difference.
    pub fn sub(&self, o: &Self) -> Self {
        Self {
            plus: mat3::sub(&self.plus, &o.plus),
            minus: mat3::sub(&self.minus, &o.minus),
        }
    }

    /// Commutator `[self, o]`.
    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Multiplies by a bicomplex scalar.
    pub fn scale(&self, s: Bicomplex<T>) -> Self {
        Self {
            plus: mat3::scale(&self.plus, s.plus()),
            minus: mat3::scale(&self.minus, s.minus()),
        }
    }

    /// Multiplies by a complex scalar.
    pub fn scale_c(&self, s: Complex<T>) -> Self {
        Self {
            plus: mat3::scale(&self.plus, s),
            minus: mat3::scale(&self.minus, s),
        }
    }

    /// Bicomplex-linear transpose.
    pub fn transpose(&self) -> Self {
        Self {
            plus: mat3::transpose(&self.plus),
            minus: mat3::transpose(&self.minus),
        }
    }

    /// Entrywise para-complex conjugation (swaps the parts).
    pub fn tau_conj(&self) -> Self {
        Self {
            plus: self.minus,
            minus: self.plus,
        }
    }

    /// Determinant.
    pub fn det(&self) -> Bicomplex<T> {
        Bicomplex::from_idempotent(mat3::det(&self.plus), mat3::det(&self.minus))
    }

    /// Trace.
    pub fn trace(&self) -> Bicomplex<T> {
        Bicomplex::from_idempotent(mat3::trace(&self.plus), mat3::trace(&self.minus))
    }

    /// Inverse, or [`AlgebraError::Singular`] when either part is singular.
    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        let p = checked_inverse(&self.plus)?;
        let m = checked_inverse(&self.minus)?;
        Ok(Self { plus: p, minus: m })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &BcVec3<T>) -> BcVec3<T> {
        BcVec3 {
            plus: mat3::apply(&self.plus, &v.plus),
            minus: mat3::apply(&self.minus, &v.minus),
        }
    }

    /// Largest modulus over all idempotent components.
    pub fn norm_max(&self) -> T {
        mat3::max_abs(&self.plus).max(mat3::max_abs(&self.minus))
    }

    /// `norm_max(self - o)`.
    pub fn dist(&self, o: &Self) -> T {
        self.sub(o).norm_max()
    }
}

impl<T: Float + Serialize> Serialize for BcMat3<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de, T: Float + Deserialize<'de>> Deserialize<'de> for BcMat3<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let e = <[[Bicomplex<T>; 3]; 3]>::deserialize(d)?;
        Ok(Self::from_entries(&e))
    }
}

impl<T: Float + Serialize> Serialize for BcVec3<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de, T: Float + Deserialize<'de>> Deserialize<'de> for BcVec3<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let e = <[Bicomplex<T>; 3]>::deserialize(d)?;
        Ok(Self::from_entries(e))
    }
}

/// The Gram matrix `Q = diag(1, 1, -1)` of the form `q`.
pub fn q_matrix<T: Float>() -> CMat3<T> {
    mat3::diag([T::one(), T::one(), -T::one()])
}

/// Inverse with a relative determinant check: `|det| / max(1, |a|^3)` must
/// exceed [`ZERO_DIVISOR_TOL`].
pub fn checked_inverse<T: Float>(a: &CMat3<T>) -> Result<CMat3<T>, AlgebraError> {
    let scale = T::one().max(mat3::max_abs(a));
    let rel = mat3::det(a).norm() / (scale * scale * scale);
    if rel <= T::from(ZERO_DIVISOR_TOL).unwrap() {
        return Err(AlgebraError::Singular(to_f64(rel)));
    }
    mat3::inverse(a).ok_or(AlgebraError::Singular(0.0))
}

/// `Phi(A) = A e+ + Q (A^-1)^T Q e-`, an isomorphism onto the subgroup of
/// `GL(3, C_tau)` preserving `q`.
pub fn phi_iso<T: Float>(a: &CMat3<T>) -> Result<BcMat3<T>, AlgebraError> {
    let inv = checked_inverse(a)?;
    let q = q_matrix::<T>();
    let minus = mat3::mul(&mat3::mul(&q, &mat3::transpose(&inv)), &q);
    Ok(BcMat3 { plus: *a, minus })
}

/// Relative defect `|X- - Q (X+^-1)^T Q| / max(1, |X-|)` of the
/// compatibility that characterises the image of `Phi`.
pub fn phi_defect<T: Float>(x: &BcMat3<T>) -> Result<T, AlgebraError> {
    let inv = checked_inverse(&x.plus).map_err(|_| AlgebraError::NotInImage(f64::INFINITY))?;
    let q = q_matrix::<T>();
    let expect = mat3::mul(&mat3::mul(&q, &mat3::transpose(&inv)), &q);
    let scale = T::one().max(mat3::max_abs(&x.minus));
    Ok(mat3::dist(&x.minus, &expect) / scale)
}

/// Inverse of [`phi_iso`]: returns the `e+` part after checking the
/// compatibility to relative tolerance `tol`.
pub fn phi_inv<T: Float>(x: &BcMat3<T>, tol: T) -> Result<CMat3<T>, AlgebraError> {
    let d = phi_defect(x)?;
    if d > tol || d.is_nan() {
        return Err(AlgebraError::NotInImage(to_f64(d)));
    }
    Ok(x.plus)
}

#[cfg(test)]
mod tests {
    use super::*;

    type B = Bicomplex<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn tau_squares_to_one() {
        let t = B::tau();
        assert_eq!(t * t, B::one());
        let i = B::i();
        assert_eq!(i * t, t * i);
        assert_eq!(i * i, -B::one());
    }

    #[test]
    fn idempotents_are_orthogonal() {
        let (p, m) = (B::e_plus(), B::e_minus());
        assert_eq!(p * p, p);
        assert_eq!(m * m, m);
        assert_eq!(p * m, B::zero());
        assert_eq!(p + m, B::one());
    }

    #[test]
    fn tau_norm_of_tau_and_e_plus() {
        assert_eq!(B::tau().tau_norm(), c(-1.0, 0.0));
        assert_eq!(B::e_plus().tau_norm(), c(0.0, 0.0));
        let x = B::new(c(2.0, 1.0), c(0.5, -0.3));
        let prod = x * x.tau_conj();
        assert!(prod.z2.norm() < 1e-15);
        assert!((prod.z1 - x.tau_norm()).norm() < 1e-15);
    }

    #[test]
    fn invert_roundtrip_and_zero_divisor() {
        let x = B::new(c(3.0, 0.0), c(1.0, 0.0));
        assert_eq!(x.tau_norm(), c(8.0, 0.0));
        let y = x.invert().unwrap();
        assert!((x * y).dist(&B::one()) < 1e-15);
        assert!(matches!(
            B::e_plus().invert(),
            Err(AlgebraError::ZeroDivisor { .. })
        ));
    }

    #[test]
    fn phi_identity_and_singular() {
        let id = mat3::identity::<f64>();
        let x = phi_iso(&id).unwrap();
        assert_eq!(x, BcMat3::identity());
        let z = mat3::zero::<f64>();
        assert!(matches!(phi_iso(&z), Err(AlgebraError::Singular(_))));
    }

    #[test]
    fn phi_inv_rejects_generic_matrix() {
        let mut x = BcMat3::<f64>::identity();
        x.minus[0][1] = c(0.5, 0.0);
        assert!(matches!(phi_inv(&x, 1e-10), Err(AlgebraError::NotInImage(_))));
    }

    #[test]
    fn json_shapes() {
        let x = B::new(c(1.0, 2.0), c(3.0, 4.0));
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"z1":[1.0,2.0],"z2":[3.0,4.0]}"#);
        let m = BcMat3::<f64>::identity();
        let back: BcMat3<f64> = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn generic_over_f32() {
        let x = Bicomplex::<f32>::new(Complex::new(2.0, 0.0), Complex::new(1.0, 0.0));
        let y = x.invert().unwrap();
        assert!((x * y).dist(&Bicomplex::<f32>::one()) < 1e-6);
    }
}
