//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues below this are treated as zero when factoring.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Returns `F` (n x r) with `F F^T = sigma`, keeping only eigenpairs whose
/// eigenvalue exceeds [`EIGEN_FLOOR`]. `sigma` must be symmetric PSD up to
/// round-off.
pub fn psd_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sigma.nrows();
    let eig = SymmetricEigen::new(sigma.clone());
    let keep: alloc::vec::Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > EIGEN_FLOOR)
        .collect();
    let mut f = DMatrix::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = crate::math::sqrt(eig.eigenvalues[k]);
        for i in 0..n {
            f[(i, c)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    f
}

/// `F z` for a factor from [`psd_factor`].
pub fn apply_factor(f: &DMatrix<f64>, z: &[f64]) -> DVector<f64> {
    f * DVector::from_column_slice(z)
}
