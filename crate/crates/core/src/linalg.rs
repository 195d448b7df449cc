//! Small dense helpers shared by the Nyström and learning code.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`; the matrices involved
//! are m×m with m in the tens to hundreds, so plain dense routines suffice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order (columns of `vectors` permuted to match).
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if !m.is_square() {
        return Err(Error::input(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SortedEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if values.iter().any(|v| !v.is_finite()) || vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite values".into()));
    }
    Ok(SortedEigen { values, vectors })
}

/// (M + Mᵀ) / 2. Exactly symmetric output; a symmetric input is returned bit-for-bit.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// U diag(values) Uᵀ, symmetrized.
pub fn compose(vectors: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    symmetrize(&(scaled * vectors.transpose()))
}

pub fn frob_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Smallest and largest eigenvalue of a symmetric matrix. Empty matrices give (0, 0).
pub fn eig_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let e = sym_eigen(m)?;
    if e.values.is_empty() {
        return Ok((0.0, 0.0));
    }
    Ok((e.values[e.values.len() - 1], e.values[0]))
}

/// λ_min ≥ −tol·max(λ_max, 0).
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let (lo, hi) = eig_extremes(m)?;
    Ok(lo >= -tol * hi.max(0.0))
}

/// Rows of `m` at `indices`, in order.
pub fn select_rows(m: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), m.ncols(), |i, j| m[(indices[i], j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, -1.0]);
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[5.0, 2.0, -1.0]);
        let back = compose(&e.vectors, e.values.as_slice());
        assert!(frob_norm(&(back - m)) < 1e-12);
    }

    #[test]
    fn symmetrize_keeps_symmetric_input_exact() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 0.3, 0.3, 0.7]);
        assert_eq!(symmetrize(&m), m);
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(sym_eigen(&m), Err(Error::Input(_))));
    }
}
