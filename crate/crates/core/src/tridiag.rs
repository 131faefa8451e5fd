//! Thomas algorithm for tridiagonal systems.

/// Solves `A x = d` where `A` has sub-diagonal `lower[1..]`, diagonal `diag`
/// and super-diagonal `upper[..n-1]`. `lower[0]` and `upper[n-1]` are ignored.
///
/// No pivoting; the caller guarantees diagonal dominance.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    x[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
