//! Small dense-free linear algebra helpers.

/// Solves `M x = rhs` in place for a symmetric tridiagonal `M` (Thomas algorithm).
///
/// `off[k]` couples unknowns `k` and `k + 1`. Returns `false` on a zero or
/// non-finite pivot, in which case `rhs` holds garbage.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64]) -> bool {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert!(off.len() + 1 >= n);
    if n == 0 {
        return true;
    }
    let mut c = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return false;
    }
    rhs[0] /= piv;
    for k in 1..n {
        c[k - 1] = off[k - 1] / piv;
        piv = diag[k] - off[k - 1] * c[k - 1];
        if piv == 0.0 || !piv.is_finite() {
            return false;
        }
        rhs[k] = (rhs[k] - off[k - 1] * rhs[k - 1]) / piv;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_dense_product() {
        let diag = [4.0, 5.0, 6.0, 3.0, 7.0];
        let off = [1.0, -2.0, 0.5, 1.5];
        let x = [1.0, -1.0, 2.0, 0.25, -3.0];
        let mut b = vec![0.0; 5];
        for i in 0..5 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += off[i - 1] * x[i - 1];
            }
            if i < 4 {
                b[i] += off[i] * x[i + 1];
            }
        }
        assert!(solve_tridiagonal(&diag, &off, &mut b));
        for i in 0..5 {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut b = [1.0, 1.0];
        assert!(!solve_tridiagonal(&[0.0, 1.0], &[1.0], &mut b));
    }
}
