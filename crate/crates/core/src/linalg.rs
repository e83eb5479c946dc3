//! Dense complex linear algebra used by the Monte Carlo path.
//!
//! Storage, products and the Cholesky/LU factorizations come from nalgebra.
//! The Hermitian eigensolver is a cyclic Jacobi sweep: the matrices here are
//! at most a few hundred wide, and Jacobi yields a real spectrum to full
//! relative accuracy without a non-symmetric eigenroutine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`, when requested.
    pub vectors: Option<CMatrix>,
}

fn off_diagonal_norm2(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Only the Hermitian part of `a` is used: the input is symmetrized as
/// `(A + Aᴴ)/2` first.
pub fn hermitian_eigen(a: &CMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Numerical(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let mut a = (a + a.adjoint()).scale(0.5);
    let mut v = want_vectors.then(|| CMatrix::identity(n, n));

    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let tol = (f64::EPSILON * f64::EPSILON) * total;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm2(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase rotation making a[p,q] real and positive: scale
                // column q by e^{-iφ} and row q by e^{iφ}.
                let phase = apq / mag;
                let conj_phase = phase.conj();
                for k in 0..n {
                    a[(k, q)] *= conj_phase;
                }
                for k in 0..n {
                    a[(q, k)] *= phase;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        v[(k, q)] *= conj_phase;
                    }
                }

                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s;
                    a[(k, q)] = akp * s + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s;
                    a[(q, k)] = apk * s + aqk * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(app - t * mag, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * mag, 0.0);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * s;
                        v[(k, q)] = vkp * s + vkq * c;
                    }
                }
            }
        }
    }
    if off_diagonal_norm2(&a) > tol.max(f64::MIN_POSITIVE) * 1e4 {
        return Err(Error::Numerical("Jacobi sweeps did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]));
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(a, false).map(|e| e.values)
}

/// `ln det A` for Hermitian positive definite `A`, from its Cholesky factor.
pub fn ln_det_hpd(a: &CMatrix) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        // the complex factorization does not reject a negative pivot on its own
        let d = l[(i, i)];
        if !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re {
            return Err(Error::Numerical("matrix is not positive definite".into()));
        }
        acc += 2.0 * d.re.ln();
    }
    Ok(acc)
}

/// `ln |det A|` for a general square matrix, from an LU factorization.
pub fn ln_abs_det(a: &CMatrix) -> Result<f64> {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        let d = u[(i, i)].norm();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numerical("singular matrix in determinant".into()));
        }
        acc += d.ln();
    }
    Ok(acc)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}
