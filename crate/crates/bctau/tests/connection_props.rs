//! Property tests for the flat connection: compatibility, gauge covariance
//! and holonomy conjugation.

use bctau::bicomplex::BcMat3;
use bctau::connection::{self, FlatConnectionField, Loop, Step};
use bctau::grid::Field;
use bctau::metric::{BeltramiChart, CubicPair};
use bctau::{mat3, BcMat3f, CMat3f, Complex64};
use proptest::prelude::*;

const N: usize = 8;

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex64::new(re, im))
}

fn cmat(r: f64) -> impl Strategy<Value = CMat3f> {
    [[complex(r), complex(r), complex(r)], [complex(r), complex(r), complex(r)], [complex(r), complex(r), complex(r)]]
}

/// `X+` arbitrary and `X-` fixed by the infinitesimal isometry condition.
fn compatible_algebra() -> impl Strategy<Value = BcMat3f> {
    cmat(1.0).prop_map(|p| {
        let q = connection::q_tilde();
        let m = mat3::scale(&mat3::mul(&mat3::mul(&q, &mat3::transpose(&p)), &q), Complex64::new(-1.0, 0.0));
        BcMat3::from_parts(p, m)
    })
}

/// `G+ = I + E` and `G-` fixed by the group isometry condition.
fn compatible_group() -> impl Strategy<Value = BcMat3f> {
    cmat(0.3).prop_map(|e| {
        let p = mat3::add(&mat3::identity(), &e);
        let q = connection::q_tilde();
        let inv = bctau::bicomplex::checked_inverse(&p).unwrap();
        let m = mat3::mul(&mat3::mul(&q, &mat3::transpose(&inv)), &q);
        BcMat3::from_parts(p, m)
    })
}

fn constant_connection(alpha: Complex64, beta: Complex64, psi: Complex64, mu: Complex64) -> FlatConnectionField {
    let chart = BeltramiChart::constant(N, mu).unwrap();
    connection::assemble(&Field::constant(N, psi), &CubicPair::constant(N, alpha, beta), &chart).unwrap()
}

fn data() -> impl Strategy<Value = FlatConnectionField> {
    (complex(1.0), complex(1.0), complex(0.3), complex(0.4))
        .prop_map(|(a, b, p, m)| constant_connection(a, b, p, m))
}

fn square_loop() -> Loop {
    Loop::new(N, (1, 2), vec![Step::XPlus, Step::XPlus, Step::YPlus, Step::XMinus, Step::XMinus, Step::YMinus]).unwrap()
}

fn reverse(s: Step) -> Step {
    match s {
        Step::XPlus => Step::XMinus,
        Step::XMinus => Step::XPlus,
        Step::YPlus => Step::YMinus,
        Step::YMinus => Step::YPlus,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compatible_elements_have_zero_defect(x in compatible_algebra(), g in compatible_group()) {
        prop_assert!(connection::infinitesimal_compat_defect(&x) < 1e-14);
        prop_assert!(connection::frame_compat_defect(&g).unwrap() < 1e-12);
    }

    #[test]
    fn assembled_data_is_compatible(conn in data()) {
        prop_assert!(conn.compat_defect() < 1e-12);
        prop_assert!(conn.trace_defect() < 1e-12);
    }

    #[test]
    fn gauge_transform_preserves_compatibility(conn in data(), g in compatible_group()) {
        let moved = conn.conjugate(&g).unwrap();
        let scale = 1.0 + g.norm_max() * g.inverse().unwrap().norm_max();
        prop_assert!(moved.compat_defect() < 1e-12 * scale * scale);
        prop_assert!(moved.trace_defect() < 1e-11 * scale * scale);
    }

    #[test]
    fn holonomy_is_gauge_covariant(conn in data(), g in compatible_group()) {
        let lp = square_loop();
        let hol = connection::holonomy(&conn, &lp);
        let moved = connection::holonomy(&conn.conjugate(&g).unwrap(), &lp);
        let expect = g.inverse().unwrap().mul(&hol).mul(&g);
        prop_assert!(moved.dist(&expect) < 1e-10 * (1.0 + expect.norm_max()));
    }

    #[test]
    fn reversed_loop_inverts_holonomy(conn in data(), i in 0..N, j in 0..N) {
        let steps = vec![Step::XPlus, Step::YPlus, Step::XMinus, Step::YMinus];
        let fwd = Loop::new(N, (i, j), steps.clone()).unwrap();
        let back = Loop::new(N, (i, j), steps.iter().rev().map(|&s| reverse(s)).collect()).unwrap();
        let prod = connection::holonomy(&conn, &fwd).mul(&connection::holonomy(&conn, &back));
        prop_assert!(prod.dist(&BcMat3f::identity()) < 1e-12);
    }

    #[test]
    fn holonomy_stays_in_the_isometry_group(conn in data()) {
        let hol = connection::holonomy(&conn, &Loop::x_period(N, 3));
        prop_assert!(connection::frame_compat_defect(&hol).unwrap() < 1e-10);
        let det = hol.det();
        prop_assert!((det.plus() - 1.0).norm() < 1e-10);
        prop_assert!((det.minus() - 1.0).norm() < 1e-10);
    }
}
