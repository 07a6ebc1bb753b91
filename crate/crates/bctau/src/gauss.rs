//! The Gauss equation `K_h = -1 + 8 ||C||_h^2` for `h = e^{2 psi} g` on the
//! torus: residuals in two formulations, the constant-data reduction, a damped
//! Newton solver and the Wang specialisation.
//!
//! Relative to a background `g` with curvature `K_g` the equation reads
//! `Lap_g psi - K_g - e^{2 psi} + 8 e^{-4 psi} ||C||_g^2 = 0`. The unknown `psi`
//! may be complex; Newton systems are solved on the real/imaginary split.

use num_complex::Complex64;
use serde::Serialize;

use crate::grid::Field;
use crate::krylov::{self, KrylovReport};
use crate::metric::{self, ComplexMetric, CubicPair};

/// Errors of the Gauss solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    /// The problem violates its invariants.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    /// The intrinsic residual needs a background with `psi_g = 0`.
    #[error("intrinsic residual needs psi_g = 0, found max |psi_g| = {0:e}")]
    ChartMismatch(f64),
    /// `-K_g - u + 8c/u^2 = 0` has no positive root.
    #[error("no positive root for c = {c}, K_g = {kg}")]
    NoPositiveRoot { c: f64, kg: f64 },
    /// Newton stopped before reaching the tolerance.
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    DidNotConverge { iterations: usize, residual: f64 },
    /// A Newton linear system was not solved.
    #[error("linear solve failed at Newton iteration {iteration} (relative residual {residual:e})")]
    LinearSolveFailure { iteration: usize, residual: f64 },
}

/// Data of the Gauss equation relative to a background metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussProblem {
    /// Background metric `g`.
    pub background: ComplexMetric,
    /// Curvature field `K_g` of the background.
    pub kg: Field,
    /// Cubic differential pair.
    pub cubic: CubicPair,
    /// Initial guess; defaults to the constant root of the averaged data.
    pub initial: Option<Field>,
}

impl GaussProblem {
    /// Validates sizes, the principal symbol and finiteness of `||C||_g^2`.
    pub fn new(
        background: ComplexMetric,
        kg: Field,
        cubic: CubicPair,
        initial: Option<Field>,
    ) -> Result<Self, GaussError> {
        let n = background.n();
        let sizes_ok = kg.n() == n
            && cubic.n() == n
            && initial.as_ref().map_or(true, |f| f.n() == n);
        if !sizes_ok {
            return Err(GaussError::InvalidProblem("grid sizes differ".into()));
        }
        if !metric::symbol_check_field(&background.chart.mu) {
            return Err(GaussError::InvalidProblem(
                "principal symbol has a real root (|mu| = 1)".into(),
            ));
        }
        let p = Self {
            background,
            kg,
            cubic,
            initial,
        };
        if !p.eight_cubic_norm().is_finite() || !p.kg.is_finite() {
            return Err(GaussError::InvalidProblem("non-finite data".into()));
        }
        Ok(p)
    }

    /// Problem whose `K_g` is the discrete curvature of the background.
    pub fn with_background_curvature(
        background: ComplexMetric,
        cubic: CubicPair,
    ) -> Result<Self, GaussError> {
        let kg = metric::curvature(&background);
        Self::new(background, kg, cubic, None)
    }

    /// Grid size.
    pub fn n(&self) -> usize {
        self.background.n()
    }

    /// The cubic pair after holomorphic projection (when flagged).
    pub fn effective_cubic(&self) -> CubicPair {
        self.cubic.projected()
    }

    /// `8 ||C||_g^2` of the projected cubic pair.
    pub fn eight_cubic_norm(&self) -> Field {
        metric::cubic_norm(&self.background, &self.effective_cubic()).scale_re(8.0)
    }

    /// Default initial guess: `psi = log(u)/2` with `u` the constant root of
    /// the averaged data, or zero when no positive root exists.
    pub fn default_initial(&self) -> Field {
        let c = self.eight_cubic_norm().mean().re / 8.0;
        let kg = self.kg.mean().re;
        let psi0 = constant_root(c, kg).map(|u| 0.5 * u.ln()).unwrap_or(0.0);
        Field::constant(self.n(), psi0.into())
    }
}

fn residual_with(problem: &GaussProblem, lap: &metric::LaplacianOp, c8: &Field, psi: &Field) -> Field {
    let l = lap.apply(psi);
    Field::from_index_fn(psi.n(), |i, j| {
        let p = psi.at(i, j);
        l.at(i, j) - problem.kg.at(i, j) - (2.0 * p).exp() + (-4.0 * p).exp() * c8.at(i, j)
    })
}

/// `Lap_g psi - K_g - e^{2 psi} + 8 e^{-4 psi} ||C||_g^2` pointwise.
pub fn residual_background(psi: &Field, problem: &GaussProblem) -> Field {
    let lap = problem.background.laplacian_op();
    residual_with(problem, &lap, &problem.eight_cubic_norm(), psi)
}

/// `Lap_h psi + alpha conj(beta) e^{-6 psi} - 1` with the Laplacian of the
/// unknown metric `h = e^{2 psi} dz dw-bar`. Needs `psi_g = 0`.
pub fn residual_intrinsic(psi: &Field, problem: &GaussProblem) -> Result<Field, GaussError> {
    let bg = problem.background.psi.max_abs();
    if bg > 0.0 {
        return Err(GaussError::ChartMismatch(bg));
    }
    let h = ComplexMetric::new(psi.clone(), problem.background.chart.clone())
        .map_err(|e| GaussError::InvalidProblem(e.to_string()))?;
    let lap = metric::laplacian(&h, psi);
    let c = problem.effective_cubic();
    Ok(Field::from_index_fn(psi.n(), |i, j| {
        lap.at(i, j) + c.alpha.at(i, j) * c.beta.at(i, j).conj() * (-6.0 * psi.at(i, j)).exp()
            - 1.0
    }))
}

/// Largest positive root `u` of `-K_g - u + 8 c / u^2 = 0`, i.e. of
/// `u^3 + K_g u^2 - 8 c = 0`, by bracketing, bisection and Newton polishing.
pub fn constant_root(c: f64, kg: f64) -> Result<f64, GaussError> {
    let err = GaussError::NoPositiveRoot { c, kg };
    if !c.is_finite() || !kg.is_finite() {
        return Err(err);
    }
    let g = |u: f64| u * u * u + kg * u * u - 8.0 * c;
    let dg = |u: f64| 3.0 * u * u + 2.0 * kg * u;
    // Cauchy bound: every root has |u| < 1 + max(|K_g|, 8|c|), where g > 0.
    let top = 1.0 + kg.abs().max(8.0 * c.abs());
    let mut hi = top;
    let mut lo = None;
    for k in 1..=20000 {
        let u = top * (1.0 - k as f64 / 20000.0);
        if u <= 0.0 {
            break;
        }
        if g(u) <= 0.0 {
            lo = Some(u);
            break;
        }
        hi = u;
    }
    let mut lo = lo.ok_or(err.clone())?;
    if g(lo) == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..5 {
        let d = dg(u);
        if d == 0.0 {
            break;
        }
        let next = u - g(u) / d;
        if (next - u).abs() <= 1e-14 * u {
            u = next;
            break;
        }
        u = next;
    }
    if u > 0.0 {
        Ok(u)
    } else {
        Err(err)
    }
}

/// Newton solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Stop when the max-abs residual is at most this.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
    /// Step-halving cap of the line search.
    pub max_halvings: usize,
    /// Smallest relative tolerance requested from the linear solver.
    pub linear_tol: f64,
    /// Linear solver iteration cap.
    pub linear_max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 10,
            linear_tol: 1e-13,
            linear_max_iter: 20000,
        }
    }
}

/// Result of a Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Solution.
    #[serde(skip)]
    pub psi: Field,
    /// Newton iterations performed.
    pub iterations: usize,
    /// Max-abs residual before each iteration and at the end.
    pub residual_history: Vec<f64>,
    /// Whether the tolerance was reached.
    pub converged: bool,
    /// Krylov iterations per Newton step.
    pub linear_iterations: Vec<usize>,
    /// Accepted step lengths.
    pub step_lengths: Vec<f64>,
}

fn split(f: &Field) -> Vec<f64> {
    let d = f.data();
    let mut v = Vec::with_capacity(2 * d.len());
    v.extend(d.iter().map(|z| z.re));
    v.extend(d.iter().map(|z| z.im));
    v
}

fn join(n: usize, v: &[f64]) -> Field {
    let m = n * n;
    Field::from_vec(n, (0..m).map(|k| Complex64::new(v[k], v[m + k])).collect())
}

/// Solves the Gauss equation by Newton's method with step-halving.
///
/// The Jacobian is `Lap_g - 2 e^{2 psi} - 32 e^{-4 psi} ||C||_g^2`; each
/// linear system is solved by BiCGSTAB on the real split with the complex
/// diagonal as preconditioner.
pub fn solve_newton(problem: &GaussProblem, opts: &SolveOptions) -> Result<SolveReport, GaussError> {
    let n = problem.n();
    let lap = problem.background.laplacian_op();
    let lap_diag = lap.diagonal();
    let c8 = problem.eight_cubic_norm();
    let mut psi = problem
        .initial
        .clone()
        .unwrap_or_else(|| problem.default_initial());
    let mut f = residual_with(problem, &lap, &c8, &psi);
    let mut r = f.max_abs();
    let mut report = SolveReport {
        psi: psi.clone(),
        iterations: 0,
        residual_history: vec![r],
        converged: r <= opts.tol,
        linear_iterations: Vec::new(),
        step_lengths: Vec::new(),
    };
    while !report.converged && report.iterations < opts.max_iter {
        let it = report.iterations + 1;
        let shift = Field::from_index_fn(n, |i, j| {
            let p = psi.at(i, j);
            -2.0 * (2.0 * p).exp() - 4.0 * (-4.0 * p).exp() * c8.at(i, j)
        });
        let diag = &lap_diag + &shift;
        let apply = |v: &[f64]| split(&(&lap.apply(&join(n, v)) + &(&shift * &join(n, v))));
        let precond = |v: &[f64]| split(&join(n, v).div(&diag));
        let rhs = split(&-&f);
        let mut x = vec![0.0; rhs.len()];
        let tol = (0.1 * r).clamp(opts.linear_tol, 1e-3);
        let kr: KrylovReport = krylov::bicgstab(apply, precond, &rhs, &mut x, tol, opts.linear_max_iter);
        report.linear_iterations.push(kr.iterations);
        if !kr.converged && kr.relative_residual > 1e-2 {
            return Err(GaussError::LinearSolveFailure {
                iteration: it,
                residual: kr.relative_residual,
            });
        }
        let delta = join(n, &x);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &psi + &delta.scale_re(t);
            let ft = residual_with(problem, &lap, &c8, &trial);
            let rt = ft.max_abs();
            if rt.is_finite() && rt < r {
                accepted = Some((trial, ft, rt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft, rt)) = accepted else {
            return Err(GaussError::DidNotConverge {
                iterations: it,
                residual: r,
            });
        };
        psi = trial;
        f = ft;
        r = rt;
        report.iterations = it;
        report.step_lengths.push(t);
        report.residual_history.push(r);
        report.converged = r <= opts.tol;
    }
    if !report.converged {
        return Err(GaussError::DidNotConverge {
            iterations: report.iterations,
            residual: r,
        });
    }
    report.psi = psi;
    Ok(report)
}

/// The Hitchin-locus problem `alpha = beta = q` over the flat background.
pub fn wang_specialize(q: &Field) -> GaussProblem {
    let n = q.n();
    let cubic = CubicPair {
        alpha: q.clone(),
        beta: q.clone(),
        holomorphic: false,
    };
    GaussProblem {
        background: ComplexMetric::flat(n),
        kg: Field::zeros(n),
        cubic,
        initial: None,
    }
}

/// Wang residual `K - 2 ||U||^2 + 1` of the solved metric
/// `g = 2 e^{2 psi} |dz|^2` with affine cubic form `U = 2 q dz^3` and
/// `||U||^2 = |U|^2 / lambda^3`, `lambda = 2 e^{2 psi}`.
pub fn wang_residual(psi: &Field, q: &Field) -> Field {
    let h = ComplexMetric::new(psi.clone(), metric::BeltramiChart::flat(psi.n())).expect("sizes");
    let k = metric::curvature(&h);
    Field::from_index_fn(psi.n(), |i, j| {
        let lambda = 2.0 * (2.0 * psi.at(i, j)).exp();
        let u2 = 4.0 * q.at(i, j).norm_sqr();
        k.at(i, j) - 2.0 * u2 / (lambda * lambda * lambda) + 1.0
    })
}
