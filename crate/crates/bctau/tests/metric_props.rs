//! Property tests for the discrete complex metric and the Gauss solver.

use bctau::gauss::{self, GaussProblem, SolveOptions};
use bctau::grid::Field;
use bctau::metric::{self, BeltramiChart, ComplexMetric, CubicPair};
use bctau::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const N: usize = 16;

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Beltrami constants inside the disc of radius 0.7.
fn mu() -> impl Strategy<Value = Complex64> {
    complex(0.49)
}

/// A smooth periodic field with two random Fourier amplitudes.
fn smooth(a: Complex64, b: Complex64) -> Field {
    Field::from_fn(N, |x, y| {
        a * (2.0 * PI * x).sin() + b * (2.0 * PI * (x + y)).cos()
    })
}

fn metric_with(mu: Complex64, a: Complex64, b: Complex64) -> ComplexMetric {
    let chart = BeltramiChart::constant(N, -mu).unwrap();
    ComplexMetric::new(smooth(a, b), chart).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_kills_constants(m in mu(), a in complex(0.3), b in complex(0.3), c in complex(3.0)) {
        let h = metric_with(m, a, b);
        let lap = metric::laplacian(&h, &Field::constant(N, c));
        prop_assert!(lap.max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_is_linear(m in mu(), a in complex(0.3), b in complex(0.3), s in complex(2.0)) {
        let h = metric_with(m, a, b);
        let f = smooth(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5));
        let g = smooth(Complex64::new(0.2, -0.3), Complex64::new(0.7, 0.0));
        let lhs = metric::laplacian(&h, &(&f.scale(s) + &g));
        let rhs = &metric::laplacian(&h, &f).scale(s) + &metric::laplacian(&h, &g);
        prop_assert!((&lhs - &rhs).max_abs() < 1e-9 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn constant_gauge_shift_rescales_laplacian(m in mu(), a in complex(0.3), b in complex(0.3), c in -1.0..1.0f64) {
        let h = metric_with(m, a, b);
        let shifted = ComplexMetric::new(&h.psi + &Field::constant(N, c.into()), h.chart.clone()).unwrap();
        let f = smooth(Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.6));
        let lhs = metric::laplacian(&shifted, &f);
        let rhs = metric::laplacian(&h, &f).scale_re((-2.0 * c).exp());
        prop_assert!((&lhs - &rhs).max_abs() < 1e-9 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn real_metric_has_real_curvature(a in -0.4..0.4f64, b in -0.4..0.4f64) {
        let psi = smooth(a.into(), b.into());
        let h = ComplexMetric::new(psi, BeltramiChart::flat(N)).unwrap();
        prop_assert!(metric::curvature(&h).max_abs_im() < 1e-12);
    }

    #[test]
    fn area_integral_is_linear(m in mu(), a in complex(0.3), b in complex(0.3), s in complex(2.0), t in complex(2.0)) {
        let h = metric_with(m, a, b);
        let f = smooth(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5));
        let g = Field::constant(N, Complex64::new(1.0, 0.0));
        let lhs = metric::area_integrate(&h, &(&f.scale(s) + &g.scale(t)));
        let rhs = s * metric::area_integrate(&h, &f) + t * metric::area_integrate(&h, &g);
        prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn symbol_check_tracks_the_unit_circle(r in 0.0..2.0f64, theta in 0.0..(2.0 * PI)) {
        let m = Complex64::from_polar(r, theta);
        prop_assert_eq!(metric::symbol_check(m), (1.0 - r).abs() > 1e-12);
    }

    #[test]
    fn newton_converges_with_monotone_tail(
        m in mu(),
        alpha in complex(0.8),
        beta in complex(0.8),
        kg in -2.0..-0.2f64,
    ) {
        let chart = BeltramiChart::constant(N, -m).unwrap();
        let bg = ComplexMetric::new(Field::zeros(N), chart).unwrap();
        let bump = smooth(Complex64::new(0.05, 0.0), Complex64::new(0.0, 0.05));
        let problem = GaussProblem::new(
            bg,
            Field::constant(N, kg.into()),
            CubicPair::constant(N, alpha, beta),
            Some(bump),
        ).unwrap();
        let report = gauss::solve_newton(&problem, &SolveOptions::default()).unwrap();
        prop_assert!(report.converged);
        let hist = &report.residual_history;
        let last = hist.len() - 1;
        // Quadratic convergence: the final steps strictly decrease.
        for k in last.saturating_sub(2)..last {
            prop_assert!(hist[k + 1] < hist[k], "{hist:?}");
        }
        let r = gauss::residual_background(&report.psi, &problem);
        prop_assert!(r.max_abs() <= 1e-10);
    }

    #[test]
    fn constant_root_solves_the_scalar_equation(c in 0.0..2.0f64, kg in -3.0..3.0f64) {
        if let Ok(u) = gauss::constant_root(c, kg) {
            prop_assert!(u > 0.0);
            prop_assert!((-kg - u + 8.0 * c / (u * u)).abs() < 1e-10 * (1.0 + u + kg.abs()));
        } else {
            // No positive root needs c = 0 and kg >= 0.
            prop_assert!(c == 0.0 && kg >= 0.0);
        }
    }
}
