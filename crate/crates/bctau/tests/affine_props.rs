//! Property tests for affine pairs, the Wang pipeline and the second variation.

use bctau::affine::{self, AffinePair, SecondVariationData};
use bctau::connection;
use bctau::criteria;
use bctau::grid::Field;
use bctau::metric::{BeltramiChart, CubicPair};
use bctau::Complex64;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn pair() -> impl Strategy<Value = AffinePair> {
    let n = 5;
    (
        prop::collection::vec(vec3(), n * n),
        prop::collection::vec(vec3(), n * n),
    )
        .prop_map(move |(p, m)| AffinePair::new(n, 0.25, p, m).unwrap())
}

fn gl3() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-0.3..0.3f64)
        .prop_map(|e| Matrix3::identity() + Matrix3::from_row_slice(&e))
}

/// Constant cubic differentials of moderate size.
fn q() -> impl Strategy<Value = Complex64> {
    (0.3..1.5f64, 0.0..6.3f64).prop_map(|(r, th)| Complex64::from_polar(r, th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_is_an_involution(p in pair()) {
        prop_assert_eq!(p.dual().dual(), p);
    }

    #[test]
    fn linear_maps_preserve_the_pairing(p in pair(), l in gl3()) {
        let moved = p.transform(&l).unwrap();
        prop_assert!((moved.eta_defect() - p.eta_defect()).abs() < 1e-11);
        prop_assert!((moved.conormal_defect() - p.conormal_defect()).abs() < 1e-10);
    }

    #[test]
    fn curvature_part_is_quadratic(z1 in -2.0..2.0f64, z2 in -2.0..2.0f64, t in -3.0..3.0f64) {
        let base = affine::curvature_part([z1, z2]);
        let scaled = affine::curvature_part([t * z1, t * z2]);
        prop_assert!((scaled - t * t * base).abs() < 1e-12 * (1.0 + base.abs()) * (1.0 + t * t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn wang_pipeline_conserves_eta_and_has_definite_metric(q in q()) {
        let n = 32;
        let psi = criteria::wang_solution(n, q).unwrap();
        let conn = connection::assemble(&psi, &CubicPair::constant(n, q, q), &BeltramiChart::flat(n)).unwrap();
        let fi = affine::integrate_frame(&conn).unwrap();
        let h2 = fi.pair.h * fi.pair.h;
        prop_assert!(fi.pair.eta_defect() < 20.0 * h2);
        let rep = affine::structure_residuals(&fi.pair.fplus, n, fi.pair.h).unwrap();
        for g in rep.data.gb.iter().filter(|g| g.iter().all(|x| x.is_finite())) {
            prop_assert!(g[(0, 0)] > 0.0 && g.determinant() > 0.0);
            prop_assert!((g[(0, 1)] - g[(1, 0)]).abs() < 1e-12 * g.norm());
        }
    }

    #[test]
    fn second_variation_is_negative(q in q(), seed in 0u64..1000) {
        let n = 32;
        let psi = criteria::wang_solution(n, q).unwrap();
        let data = SecondVariationData::from_gauss(&psi, &Field::constant(n, q));
        let z = criteria::random_tangent_field(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let sv = affine::second_variation_trace(&z, &data);
        let worst = sv.total.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst < 0.0, "{worst}");
    }
}
