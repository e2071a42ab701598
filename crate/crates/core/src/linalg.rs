//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `‖m − m†‖_max`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::domain(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &CMatrix, dim: usize) -> Result<()> {
    let n = ensure_square(m)?;
    if n != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: n,
        });
    }
    Ok(())
}

/// Hermitian tolerance scaled to the matrix size.
pub fn ensure_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    ensure_square(m)?;
    let scale = max_abs(m).max(1.0);
    if hermiticity_residual(m) > 1e-10 * scale {
        return Err(Error::domain(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascend; column `k`
/// of the returned matrix is the eigenvector for eigenvalue `k`.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(−i·t·H)` for Hermitian `H`, built from its spectral decomposition.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&values.map(|v| Complex64::from_polar(1.0, -v * t)));
    &vectors * phases * vectors.adjoint()
}

/// Conjugation `U·m·U†`.
pub fn conjugate(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()).scale(0.5);
    let mut values: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                Complex64::new(0.5, -0.3),
                c(0.1),
                Complex64::new(0.5, 0.3),
                c(-1.0),
                Complex64::new(0.0, 0.7),
                c(0.1),
                Complex64::new(0.0, -0.7),
                c(0.4),
            ],
        );
        let (values, vectors) = hermitian_eigen(&m);
        assert!(values[0] <= values[1] && values[1] <= values[2]);
        let diag = CMatrix::from_diagonal(&values.map(c));
        let rebuilt = &vectors * diag * vectors.adjoint();
        assert!(max_abs(&(rebuilt - &m)) < 1e-13);
    }

    #[test]
    fn non_square_is_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(ensure_square(&m).is_err());
    }
}
