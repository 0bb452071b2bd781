use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub(crate) struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DMatrix<Complex64>,
}

pub(crate) fn is_diagonal(m: &DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)))
}

/// Dense Hermitian eigendecomposition. Only the Hermitian part of `m` is used.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let n = m.nrows();
    // Diagonal input is returned as-is so that exact values stay exact.
    let (values, vectors) = if is_diagonal(m) {
        let values: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        (values, DMatrix::identity(n, n))
    } else {
        let herm = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0).ok_or(Error::Eigensolver)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&j| values[j]).collect();
    let mut sorted_vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = fix_phase(vectors.column(src).into_owned());
        sorted_vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values: sorted_values, vectors: sorted_vectors })
}

/// Rotates `v` so that its first nonzero component is real and positive.
pub(crate) fn fix_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|c| c.norm() > 1e-12 * scale.max(1e-300)) {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|c| *c *= phase);
    }
    v
}
