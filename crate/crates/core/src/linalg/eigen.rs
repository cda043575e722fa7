//! Small dense symmetric eigensolvers: cyclic Jacobi for full spectra and a
//! power iteration for the leading eigenvector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi diagonalisation.
///
/// Sweeps over all `(p, q)` pairs with plane rotations until the Frobenius
/// norm of the off-diagonal part drops to `tol`. The input must be square and
/// symmetric; only symmetry up to `1e-12 * ||A||_F` is checked.
pub fn jacobi_eigen(matrix: &DMatrix<f64>, tol: f64) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::invalid(format!(
            "jacobi_eigen needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    let scale = matrix.norm().max(1.0);
    if (matrix - matrix.transpose()).norm() > 1e-12 * scale {
        return Err(Error::invalid("jacobi_eigen needs a symmetric matrix"));
    }

    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off_diagonal_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // A <- J^T A J, touching rows/columns p and q only.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Leading eigenpair of a symmetric positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct LeadingEigen {
    pub value: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
}

/// Power iteration for the leading eigenvector of a PSD matrix.
///
/// The iteration matrix is squared (and rescaled) after every step, so step
/// `j` applies `G^(2^j)`; convergence is declared once successive unit
/// iterates differ by at most `tol`. A start vector (nearly) orthogonal to
/// the range of `G` is rejected with a numerical error so the caller can
/// retry from a different start.
pub fn power_iteration(
    gram: &DMatrix<f64>,
    start: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<LeadingEigen> {
    let n = gram.nrows();
    if n != gram.ncols() || start.len() != n {
        return Err(Error::invalid("power_iteration: shape mismatch"));
    }
    let scale = gram.norm();
    if scale == 0.0 {
        return Err(Error::Numerical("power_iteration: zero matrix".into()));
    }
    let start_norm = start.norm();
    if start_norm == 0.0 {
        return Err(Error::invalid("power_iteration: zero start vector"));
    }

    let mut m = gram / scale;
    let mut w = start / start_norm;
    for it in 1..=max_iter {
        let next = &m * &w;
        let norm = next.norm();
        if norm <= 1e-14 {
            return Err(Error::Numerical(format!(
                "power_iteration: start vector orthogonal to the leading eigenspace (|Mw| = {norm:e})"
            )));
        }
        let next = next / norm;
        let step = (&next - &w).norm();
        w = next;
        if step <= tol {
            let value = w.dot(&(gram * &w));
            return Ok(LeadingEigen {
                value,
                vector: w,
                iterations: it,
            });
        }
        let squared = &m * &m;
        let sq_norm = squared.norm();
        if sq_norm > 0.0 {
            m = squared / sq_norm;
        }
    }
    let residual = {
        let gw = gram * &w;
        let lambda = w.dot(&gw);
        (gw - lambda * &w).norm()
    };
    Err(Error::Numerical(format!(
        "power_iteration: no convergence after {max_iter} iterations (residual {residual:e}, iterate {:?})",
        w.as_slice()
    )))
}
