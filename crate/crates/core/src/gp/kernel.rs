use crate::num::Matrix;

use super::GpError;

/// Squared Euclidean distances between the rows of `a` and `b`.
pub fn pairwise_sq_dists(a: &Matrix, b: &Matrix) -> Result<Matrix, GpError> {
    if a.cols() != b.cols() {
        return Err(GpError::ShapeMismatch(format!(
            "points of dimension {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    Ok(Matrix::from_fn(a.rows(), b.rows(), |i, j| {
        a.row(i).iter().zip(b.row(j)).map(|(x, y)| (x - y) * (x - y)).sum()
    }))
}

/// RBF kernel `σ_f² · exp(−‖z1ᵢ − z2ⱼ‖² / 2l²)`.
pub fn kernel_matrix(z1: &Matrix, z2: &Matrix, lengthscale: f64, outputscale: f64) -> Result<Matrix, GpError> {
    Ok(rbf_from_sq_dists(pairwise_sq_dists(z1, z2)?, lengthscale, outputscale))
}

pub(crate) fn rbf_from_sq_dists(mut d2: Matrix, lengthscale: f64, outputscale: f64) -> Matrix {
    let inv = -0.5 / (lengthscale * lengthscale);
    d2.as_mut_slice().iter_mut().for_each(|d| *d = outputscale * (*d * inv).exp());
    d2
}
