//! Dense linear-algebra helpers shared by the operator and solver modules:
//! eigenvalues via real Schur, near-null vectors via shifted inverse
//! iteration, and bordered solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("eigensolver failed to converge")]
    EigFailure,
    #[error("singular linear system")]
    Singular,
}

/// All eigenvalues of a dense real matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>, LinalgError> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-13, 0).ok_or(LinalgError::EigFailure)?;
    let ev = schur.complex_eigenvalues();
    Ok(ev.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Solve a x = b by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    a.clone().lu().solve(b).ok_or(LinalgError::Singular)
}

/// Unit vector approximating the eigenvector of `m` for the eigenvalue
/// nearest `shift`, by inverse iteration on (m - shift I). A deterministic
/// seed keeps runs reproducible.
pub fn eigvec_near(m: &DMatrix<f64>, shift: f64, iters: usize) -> Result<DVector<f64>, LinalgError> {
    let n = m.nrows();
    let mut a = m.clone();
    // tiny offset keeps the factorization usable when shift hits an eigenvalue
    let off = shift + 1e-12 * (1.0 + shift.abs());
    for i in 0..n {
        a[(i, i)] -= off;
    }
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| ((i as f64 * 0.7391) + 0.13).sin());
    v /= v.norm();
    for _ in 0..iters {
        let w = lu.solve(&v).ok_or(LinalgError::Singular)?;
        let nw = w.norm();
        if !nw.is_finite() || nw == 0.0 {
            return Err(LinalgError::Singular);
        }
        v = w / nw;
    }
    Ok(v)
}

/// Solve the bordered system [[a, b], [c^T, 0]] (x, lam) = (rhs, s).
pub fn solve_bordered(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    rhs: &DVector<f64>,
    s: f64,
) -> Result<(DVector<f64>, f64), LinalgError> {
    let n = a.nrows();
    let mut big = DMatrix::zeros(n + 1, n + 1);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        big[(i, n)] = b[i];
        big[(n, i)] = c[i];
    }
    let mut r = DVector::zeros(n + 1);
    r.rows_mut(0, n).copy_from(rhs);
    r[n] = s;
    let sol = big.lu().solve(&r).ok_or(LinalgError::Singular)?;
    Ok((sol.rows(0, n).into_owned(), sol[n]))
}

/// Smallest singular value of a dense real matrix.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two eigenvalue multisets.
pub fn spectra_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|z| {
                q.iter()
                    .map(|w| (z - w).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
