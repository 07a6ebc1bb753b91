//! Dense 3x3 complex matrices stored as plain arrays.
//!
//! These helpers back the idempotent parts of [`crate::bicomplex::BcMat3`] and
//! are generic over the real scalar.

use num_complex::Complex;
use num_traits::Float;

/// A complex 3-vector.
pub type CVec3<T> = [Complex<T>; 3];
/// A complex 3x3 matrix, row-major (`m[row][col]`).
pub type CMat3<T> = [[Complex<T>; 3]; 3];

/// The zero matrix.
pub fn zero<T: Float>() -> CMat3<T> {
    [[Complex::new(T::zero(), T::zero()); 3]; 3]
}

/// The identity matrix.
pub fn identity<T: Float>() -> CMat3<T> {
    let mut m = zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex::new(T::one(), T::zero());
    }
    m
}

/// A real diagonal matrix.
pub fn diag<T: Float>(d: [T; 3]) -> CMat3<T> {
    let mut m = zero();
    for i in 0..3 {
        m[i][i] = Complex::new(d[i], T::zero());
    }
    m
}

/// Builds a matrix from real entries.
pub fn from_real<T: Float>(r: [[T; 3]; 3]) -> CMat3<T> {
    let mut m = zero();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = Complex::new(r[i][j], T::zero());
        }
    }
    m
}

/// Matrix product `a * b`.
pub fn mul<T: Float>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    let mut m = zero();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    m
}

/// Entrywise sum.
pub fn add<T: Float>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    let mut m = *a;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = m[i][j] + b[i][j];
        }
    }
    m
}

/// Entrywise difference.
pub fn sub<T: Float>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    let mut m = *a;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = m[i][j] - b[i][j];
        }
    }
    m
}

/// Multiplies every entry by a complex scalar.
pub fn scale<T: Float>(a: &CMat3<T>, s: Complex<T>) -> CMat3<T> {
    let mut m = *a;
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e = *e * s;
        }
    }
    m
}

/// Plain transpose (no conjugation).
pub fn transpose<T: Float>(a: &CMat3<T>) -> CMat3<T> {
    let mut m = zero();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
    }
    m
}

/// Entrywise complex conjugate.
pub fn conj<T: Float>(a: &CMat3<T>) -> CMat3<T> {
    let mut m = *a;
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e = e.conj();
        }
    }
    m
}

/// Determinant by cofactor expansion.
pub fn det<T: Float>(a: &CMat3<T>) -> Complex<T> {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Trace.
pub fn trace<T: Float>(a: &CMat3<T>) -> Complex<T> {
    a[0][0] + a[1][1] + a[2][2]
}

/// Inverse via the adjugate. Returns `None` when the determinant is exactly zero.
pub fn inverse<T: Float>(a: &CMat3<T>) -> Option<CMat3<T>> {
    let d = det(a);
    if d.norm() == T::zero() {
        return None;
    }
    let mut m = zero();
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            m[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / d;
        }
    }
    Some(m)
}

/// Matrix-vector product.
pub fn apply<T: Float>(a: &CMat3<T>, v: &CVec3<T>) -> CVec3<T> {
    let mut out = [Complex::new(T::zero(), T::zero()); 3];
    for i in 0..3 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

/// Largest entry modulus.
pub fn max_abs<T: Float>(a: &CMat3<T>) -> T {
    let mut m = T::zero();
    for row in a {
        for e in row {
            m = m.max(e.norm());
        }
    }
    m
}

/// Frobenius norm.
pub fn frobenius<T: Float>(a: &CMat3<T>) -> T {
    let mut s = T::zero();
    for row in a {
        for e in row {
            s = s + e.norm_sqr();
        }
    }
    s.sqrt()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: Float>(a: &CMat3<T>) -> T {
    let mut best = T::zero();
    for j in 0..3 {
        let col = a[0][j].norm() + a[1][j].norm() + a[2][j].norm();
        best = best.max(col);
    }
    best
}

/// Largest entry modulus of `a - b`.
pub fn dist<T: Float>(a: &CMat3<T>, b: &CMat3<T>) -> T {
    max_abs(&sub(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat3<f64> {
        let c = |re: f64, im: f64| Complex::new(re, im);
        [
            [c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.1)],
            [c(0.2, 0.0), c(2.0, -0.4), c(0.1, 0.3)],
            [c(-0.6, 0.9), c(0.4, 0.4), c(1.5, 0.0)],
        ]
    }

    #[test]
    fn inverse_is_two_sided() {
        let a = sample();
        let inv = inverse(&a).unwrap();
        assert!(dist(&mul(&a, &inv), &identity()) < 1e-14);
        assert!(dist(&mul(&inv, &a), &identity()) < 1e-14);
    }

    #[test]
    fn det_is_multiplicative() {
        let a = sample();
        let b = transpose(&conj(&a));
        let lhs = det(&mul(&a, &b));
        let rhs = det(&a) * det(&b);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn singular_has_no_inverse() {
        let mut a = sample();
        a[2] = a[0];
        assert!(det(&a).norm() < 1e-15);
        let z = zero::<f64>();
        assert!(inverse(&z).is_none());
    }
}
