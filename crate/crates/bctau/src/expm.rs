//! Matrix exponential of complex 3x3 matrices by scaling and squaring with
//! the degree-13 Padé approximant.
//!
//! Bicomplex matrices are exponentiated part by part in the idempotent
//! basis, since `exp(X+ e+ + X- e-) = exp(X+) e+ + exp(X-) e-`.

use num_complex::Complex64;

use crate::mat3;
use crate::{BcMat3f, CMat3f};

/// Numerator coefficients of the [13/13] Padé approximant of `exp`.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the [13/13] approximant is accurate to unit
/// roundoff without scaling.
const THETA13: f64 = 5.371920351148152;

fn lin(terms: &[(f64, &CMat3f)]) -> CMat3f {
    let mut out = mat3::zero::<f64>();
    for (c, m) in terms {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += m[i][j] * *c;
            }
        }
    }
    out
}

/// `exp(a)` for a complex 3x3 matrix.
pub fn expm(a: &CMat3f) -> CMat3f {
    let norm = mat3::norm1(a);
    if !norm.is_finite() {
        return [[Complex64::new(f64::NAN, f64::NAN); 3]; 3];
    }
    if norm == 0.0 {
        return mat3::identity();
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = mat3::scale(a, Complex64::new(0.5f64.powi(squarings), 0.0));
    let b = &PADE13;
    let id = mat3::identity::<f64>();
    let a2 = mat3::mul(&a, &a);
    let a4 = mat3::mul(&a2, &a2);
    let a6 = mat3::mul(&a4, &a2);
    let u_inner = lin(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_outer = lin(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]);
    let u = mat3::mul(&a, &mat3::add(&mat3::mul(&a6, &u_inner), &u_outer));
    let v_inner = lin(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v_outer = lin(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);
    let v = mat3::add(&mat3::mul(&a6, &v_inner), &v_outer);
    // V - U is well conditioned once |a|_1 <= THETA13.
    let den = mat3::sub(&v, &u);
    let num = mat3::add(&v, &u);
    let mut x = mat3::mul(&mat3::inverse(&den).expect("Padé denominator is invertible"), &num);
    for _ in 0..squarings {
        x = mat3::mul(&x, &x);
    }
    x
}

/// `exp(x)` for a bicomplex 3x3 matrix, computed in the idempotent basis.
pub fn expm_bc(x: &BcMat3f) -> BcMat3f {
    BcMat3f::from_parts(expm(&x.plus), expm(&x.minus))
}

/// Truncated Taylor series with scaling and squaring; an independent
/// reference for [`expm`].
pub fn expm_taylor(a: &CMat3f) -> CMat3f {
    let norm = mat3::norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = mat3::scale(a, Complex64::new(0.5f64.powi(squarings), 0.0));
    let mut term = mat3::identity::<f64>();
    let mut sum = term;
    for k in 1..=30 {
        term = mat3::scale(&mat3::mul(&term, &a), Complex64::new(1.0 / k as f64, 0.0));
        sum = mat3::add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = mat3::mul(&sum, &sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&mat3::zero()), mat3::identity());
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        let d = [c(1.5, 0.3), c(-2.0, 4.0), c(0.1, -7.0)];
        let mut a = mat3::zero::<f64>();
        for k in 0..3 {
            a[k][k] = d[k];
        }
        let e = expm(&a);
        for k in 0..3 {
            assert!((e[k][k] - d[k].exp()).norm() < 1e-13 * d[k].exp().norm().max(1.0));
        }
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let mut n = mat3::zero::<f64>();
        n[0][1] = c(2.0, 1.0);
        n[1][2] = c(-1.0, 0.5);
        let mut expect = mat3::identity::<f64>();
        let n2 = mat3::mul(&n, &n);
        expect = mat3::add(&expect, &n);
        expect = mat3::add(&expect, &mat3::scale(&n2, c(0.5, 0.0)));
        assert!(mat3::dist(&expm(&n), &expect) < 1e-14);
    }

    #[test]
    fn agrees_with_taylor_reference() {
        let a = [
            [c(0.3, 1.0), c(-2.0, 0.5), c(1.0, 0.0)],
            [c(0.7, -0.2), c(-0.1, 0.3), c(3.0, 1.0)],
            [c(1.2, 0.0), c(0.0, -2.5), c(-0.2, -1.3)],
        ];
        let p = expm(&a);
        let t = expm_taylor(&a);
        assert!(mat3::dist(&p, &t) / mat3::max_abs(&t) < 1e-12);
    }

    #[test]
    fn inverse_is_exp_of_negative() {
        let a = [
            [c(0.3, 1.0), c(-2.0, 0.5), c(1.0, 0.0)],
            [c(0.7, -0.2), c(-0.1, 0.3), c(3.0, 1.0)],
            [c(1.2, 0.0), c(0.0, -2.5), c(-0.2, -1.3)],
        ];
        let prod = mat3::mul(&expm(&a), &expm(&mat3::scale(&a, c(-1.0, 0.0))));
        assert!(mat3::dist(&prod, &mat3::identity()) < 1e-11);
    }
}
