//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `A x = rhs` in place for a tridiagonal `A` given by its
/// sub-diagonal `lower` (entry 0 unused), `diag`, and super-diagonal `upper`
/// (last entry unused). `scratch` must have the same length as `rhs`.
pub fn solve_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return Ok(());
    }
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::NumericalFailure("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::NumericalFailure(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_system() {
        // [2 -1 0 0; -1 2 -1 0; 0 -1 2 -1; 0 0 -1 2] x = [1 0 0 1] -> x = 1
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [2.0; 4];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let mut rhs = [1.0, 0.0, 0.0, 1.0];
        let mut scratch = [0.0; 4];
        solve_in_place(&lower, &diag, &upper, &mut rhs, &mut scratch).unwrap();
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut rhs = [1.0, 1.0];
        let mut scratch = [0.0; 2];
        let r = solve_in_place(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut rhs, &mut scratch);
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }
}
