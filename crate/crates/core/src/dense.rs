//! Thin wrappers over nalgebra's dense decompositions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::Grid;

pub type CMatrix = DMatrix<Complex64>;

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(h: CMatrix) -> Result<f64> {
    if h.nrows() == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let eig = h.symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Numerical("eigen-solver returned non-finite values".into()));
    }
    Ok(min)
}

/// `(sigma_min, sigma_max)` of a general complex matrix.
pub fn singular_range(m: CMatrix) -> Result<(f64, f64)> {
    if m.nrows() == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let sv = m
        .try_svd_unordered(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?
        .singular_values;
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Numerical("SVD returned non-finite values".into()));
    }
    Ok((min, max))
}

/// Matrix of the multiplication operator `f -> weights * f` in the orthonormal
/// Fourier basis (coefficients scaled by `sqrt(pi / L)`), restricted to `slots`.
///
/// Entry `(a, b)` is `<e_a, M e_b>` where `e_b` is the unit-norm mode at slot
/// `slots[b]`. Built column by column through the grid transform.
pub fn multiplication_matrix(grid: &Grid, weights: &[f64], slots: &[usize]) -> CMatrix {
    let n = grid.len();
    let m = slots.len();
    let unit = (grid.half_length() / std::f64::consts::PI).sqrt();
    let mut out = CMatrix::zeros(m, m);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &slot) in slots.iter().enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        // coefficient with discrete norm one
        buf[slot] = Complex64::new(unit, 0.0);
        grid.inverse_in_place(&mut buf);
        for (c, &w) in buf.iter_mut().zip(weights) {
            *c *= w;
        }
        grid.forward_in_place(&mut buf);
        for (a, &row) in slots.iter().enumerate() {
            out[(a, b)] = buf[row] / unit;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_weights_give_identity() {
        let g = Grid::new(3.0, 16).unwrap();
        let slots: Vec<usize> = (0..16).collect();
        let m = multiplication_matrix(&g, &vec![1.0; 16], &slots);
        let id = CMatrix::identity(16, 16);
        assert!((m - id).norm() < 1e-13);
    }

    #[test]
    fn multiplication_matrix_is_hermitian_circulant() {
        let g = Grid::new(PI, 32).unwrap();
        let w: Vec<f64> = (0..32).map(|j| 1.0 + (j as f64 * 0.3).sin().abs()).collect();
        let slots: Vec<usize> = (0..32).collect();
        let m = multiplication_matrix(&g, &w, &slots);
        assert!((&m - m.adjoint()).norm() < 1e-12);
        let eig = min_hermitian_eigenvalue(m).unwrap();
        let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((eig - wmin).abs() < 1e-10);
    }

    #[test]
    fn singular_range_of_diagonal() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(1.0, 1.0),
        ]));
        let (lo, hi) = singular_range(d).unwrap();
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 3.0).abs() < 1e-14);
    }
}
