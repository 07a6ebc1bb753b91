//! Preconditioned BiCGSTAB for real linear systems given by a matrix-free
//! operator.

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovReport {
    /// Iterations performed.
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub relative_residual: f64,
    /// Whether the tolerance was met.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with right-preconditioned BiCGSTAB, starting from `x`.
///
/// `apply` computes `A v`; `precond` applies an approximate inverse of `A`.
pub fn bicgstab<A, M>(
    apply: A,
    precond: M,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> KrylovReport
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let ax = apply(x);
    let mut r: Vec<f64> = (0..n).map(|k| b[k] - ax[k]).collect();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    if rel <= tol {
        return KrylovReport {
            iterations: 0,
            relative_residual: rel,
            converged: true,
        };
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        let phat = precond(&p);
        v = apply(&phat);
        let r0v = dot(&r0, &v);
        if r0v == 0.0 {
            break;
        }
        alpha = rho / r0v;
        let s: Vec<f64> = (0..n).map(|k| r[k] - alpha * v[k]).collect();
        if norm(&s) / bnorm <= tol {
            for k in 0..n {
                x[k] += alpha * phat[k];
            }
            return KrylovReport {
                iterations: it,
                relative_residual: norm(&s) / bnorm,
                converged: true,
            };
        }
        let shat = precond(&s);
        let t = apply(&shat);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * phat[k] + omega * shat[k];
            r[k] = s[k] - omega * t[k];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return KrylovReport {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
    }
    KrylovReport {
        iterations: max_iter,
        relative_residual: rel,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_tridiagonal() {
        let n = 200;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let l = if k > 0 { v[k - 1] } else { 0.0 };
                    let r = if k + 1 < n { v[k + 1] } else { 0.0 };
                    4.0 * v[k] - 1.5 * l - 0.5 * r
                })
                .collect()
        };
        let exact: Vec<f64> = (0..n).map(|k| (k as f64 * 0.1).sin()).collect();
        let b = apply(&exact);
        let mut x = vec![0.0; n];
        let rep = bicgstab(apply, |v: &[f64]| v.iter().map(|z| z / 4.0).collect(), &b, &mut x, 1e-12, 500);
        assert!(rep.converged);
        let err = x.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10);
    }
}
