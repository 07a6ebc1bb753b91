//! Independent reference stencils used to measure discretisation error.
//!
//! The Laplacian is evaluated here in the divergence form
//! `2 e^{-2 psi}/B (d/dz (f_zbar) + d/dzbar (conj(mu) f_zbar))`, composing
//! fourth-order first derivatives, so it shares no stencil with
//! [`crate::metric::laplacian`].

use num_complex::Complex64;

use crate::grid::Field;
use crate::metric::ComplexMetric;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fourth-order centered `d/dx`.
pub fn dx4(f: &Field) -> Field {
    let s = 1.0 / (12.0 * f.h());
    Field::from_index_fn(f.n(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        (8.0 * (f.wrap(i + 1, j) - f.wrap(i - 1, j)) - (f.wrap(i + 2, j) - f.wrap(i - 2, j))) * s
    })
}

/// Fourth-order centered `d/dy`.
pub fn dy4(f: &Field) -> Field {
    let s = 1.0 / (12.0 * f.h());
    Field::from_index_fn(f.n(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        (8.0 * (f.wrap(i, j + 1) - f.wrap(i, j - 1)) - (f.wrap(i, j + 2) - f.wrap(i, j - 2))) * s
    })
}

/// Fourth-order `d/dz`.
pub fn dz4(f: &Field) -> Field {
    dx4(f).zip_map(&dy4(f), |a, b| 0.5 * (a - I * b))
}

/// Fourth-order `d/dzbar`.
pub fn dzb4(f: &Field) -> Field {
    dx4(f).zip_map(&dy4(f), |a, b| 0.5 * (a + I * b))
}

/// Fourth-order divergence-form Laplacian of `h` applied to `f`.
pub fn laplacian4(h: &ComplexMetric, f: &Field) -> Field {
    let fzb = dzb4(f);
    let inner = dz4(&fzb);
    let flux = h.chart.mu.conj().zip_map(&fzb, |m, g| m * g);
    let outer = dzb4(&flux);
    let n = f.n();
    Field::from_index_fn(n, |i, j| {
        2.0 * (-2.0 * h.psi.at(i, j)).exp() / h.chart.b.at(i, j) * (inner.at(i, j) + outer.at(i, j))
    })
}

/// Fourth-order reference for `K_h = -Lap_h psi`.
pub fn curvature4(h: &ComplexMetric) -> Field {
    -&laplacian4(h, &h.psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{self, BeltramiChart};
    use std::f64::consts::PI;

    #[test]
    fn derivative_is_fourth_order() {
        let err = |n: usize| {
            let f = Field::from_real_fn(n, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
            let exact = Field::from_real_fn(n, |x, y| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).cos());
            (&dx4(&f) - &exact).max_abs()
        };
        let ratio = err(32) / err(64);
        assert!((14.0..18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn flat_wave_matches_closed_form() {
        let n = 64;
        let h = ComplexMetric::flat(n);
        let f = Field::from_real_fn(n, |x, _| (2.0 * PI * x).sin());
        // Flat Laplacian is (f_xx + f_yy)/2.
        let exact = f.scale_re(-2.0 * PI * PI);
        assert!((&laplacian4(&h, &f) - &exact).max_abs() < 1e-3);
    }

    #[test]
    fn agrees_with_compact_stencil_on_constant_chart() {
        let n = 128;
        let chart = BeltramiChart::constant(n, Complex64::new(-0.2, 0.1)).unwrap();
        let psi = Field::from_real_fn(n, |x, y| 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let h = ComplexMetric::new(psi, chart).unwrap();
        let d = (&curvature4(&h) - &metric::curvature(&h)).max_abs();
        assert!(d < 20.0 / (n * n) as f64, "{d}");
    }
}
