//! Dense linear algebra on column-major `Vec<f64>` storage, backed by `faer`.
//!
//! Entry `(i, j)` of an `m x n` matrix lives at `i + j * m`.

use faer::prelude::SpSolver;
use faer::{mat, Mat, MatRef, Side};

use crate::error::{invalid, Error, Result};

fn view(a: &[f64], m: usize, n: usize) -> MatRef<'_, f64> {
    mat::from_column_major_slice::<f64>(a, m, n)
}

fn to_vec(a: &Mat<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.nrows() * a.ncols());
    for j in 0..a.ncols() {
        out.extend_from_slice(a.col_as_slice(j));
    }
    out
}

/// Eigendecomposition of a symmetric `n x n` matrix (lower triangle read).
///
/// Returns ascending eigenvalues and the orthonormal eigenvectors as the
/// columns of a column-major `n x n` array.
pub fn sym_eigen(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != n * n {
        return Err(invalid("matrix storage does not match n*n"));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let eig = view(matrix, n, n).selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let values: Vec<f64> = (0..n).map(|k| s.read(k)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigensolver produced non-finite values".into()));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Numeric("eigenvalues not returned in ascending order".into()));
    }
    Ok((values, to_vec(&eig.u().to_owned())))
}

/// `y = op(A) x` for a column-major `m x n` matrix `A`.
pub fn gemv(transpose: bool, m: usize, n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), m * n);
    let a = view(a, m, n);
    if transpose {
        assert_eq!(x.len(), m);
        let y = a.transpose() * view(x, m, 1);
        y.col_as_slice(0).to_vec()
    } else {
        assert_eq!(x.len(), n);
        let y = a * view(x, n, 1);
        y.col_as_slice(0).to_vec()
    }
}

/// `C = op(A) op(B)` where `op(A)` is `m x k` and `op(B)` is `k x n`.
///
/// `A` is stored as `m x k` (or `k x m` when transposed), likewise `B`.
pub fn gemm(ta: bool, tb: bool, m: usize, n: usize, k: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let a = if ta { view(a, k, m).transpose() } else { view(a, m, k) };
    let b = if tb { view(b, n, k).transpose() } else { view(b, k, n) };
    to_vec(&(a * b))
}

/// Solves `A X = B` for symmetric positive definite `A` (`n x n`) by
/// Cholesky. `B` holds `nrhs` columns.
pub fn spd_solve(a: &[f64], n: usize, b: &[f64], nrhs: usize) -> Result<Vec<f64>> {
    if a.len() != n * n || b.len() != n * nrhs {
        return Err(invalid("spd_solve: storage does not match dimensions"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let chol = view(a, n, n)
        .cholesky(Side::Lower)
        .map_err(|_| Error::Numeric("Cholesky factorization failed; matrix not positive definite".into()))?;
    let x = chol.solve(view(b, n, nrhs));
    let out = to_vec(&x);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Cholesky solve produced non-finite values".into()));
    }
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖a - b‖₂ / ‖b‖₂`, falling back to the absolute difference when `b = 0`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm2(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_2x2() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let (w, v) = sym_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((v[0].abs() - s).abs() < 1e-14);
        assert!((v[2] * v[3] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gemm_and_gemv_agree_with_loops() {
        let (m, n, k) = (3, 2, 4);
        let a: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64).sin()).collect();
        let c = gemm(false, false, m, n, k, &a, &b);
        for i in 0..m {
            for j in 0..n {
                let want: f64 = (0..k).map(|l| a[i + l * m] * b[l + j * k]).sum();
                assert!((c[i + j * m] - want).abs() < 1e-12);
            }
        }
        let x: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let y = gemv(false, m, k, &a, &x);
        let yt = gemv(true, k, m, &transpose(&a, m, k), &x);
        assert!(rel_diff(&y, &yt) < 1e-14);
        let ct = gemm(true, false, m, n, k, &transpose(&a, m, k), &b);
        assert!(rel_diff(&c, &ct) < 1e-14);
    }

    fn transpose(a: &[f64], m: usize, n: usize) -> Vec<f64> {
        let mut t = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                t[j + i * n] = a[i + j * m];
            }
        }
        t
    }

    #[test]
    fn cholesky_solve() {
        let a = [4.0, 1.0, 1.0, 3.0];
        let x = spd_solve(&a, 2, &[1.0, 2.0], 1).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(spd_solve(&[1.0, 2.0, 2.0, 1.0], 2, &[1.0, 1.0], 1).is_err());
    }
}
