use crate::error::{Error, Result};

use super::linalg::{hermitian_eigen, hermitian_eigenvalues, singular_values, CMatrix, CVector};
use super::state::DensityOperator;

/// Eigenvalues below this are numerical drift; below its negative, an error.
pub const PSD_CLIP: f64 = 1e-10;

/// Sum of singular values.
pub fn trace_norm(x: &CMatrix) -> f64 {
    singular_values(x).iter().sum()
}

/// Frobenius norm.
pub fn hs_norm(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Number of singular values above `tol` times the largest one.
pub fn support_dimension(x: &CMatrix, tol: f64) -> usize {
    let s = singular_values(x);
    let max = s.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * max).count()
}

/// `||X||_1^2 <= d ||X||_2^2`.
pub fn norm_dim_inequality(x: &CMatrix, d: usize) -> bool {
    let t = trace_norm(x);
    let h = hs_norm(x);
    t * t <= d as f64 * h * h * (1.0 + 1e-12) + 1e-12
}

/// Trace norm of a difference of Hermitian matrices, from eigenvalues.
pub fn hermitian_trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    hermitian_eigenvalues(&(a - b)).iter().map(|v| v.abs()).sum()
}

/// `|| |a><a| - |b><b| ||_1` for arbitrary (possibly subnormalized) vectors, computed
/// in the span of the two vectors.
pub fn pure_trace_distance(a: &CVector, b: &CVector) -> f64 {
    // eigenvalues of |a><a| - |b><b| solve l^2 - (|a|^2-|b|^2) l - (|a|^2|b|^2 - |<a|b>|^2) = 0
    let na = a.norm_squared();
    let nb = b.norm_squared();
    let ov = a.dotc(b).norm_sqr();
    let tr = na - nb;
    let det = -(na * nb - ov).max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    l1.abs() + l2.abs()
}

fn checked_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m);
    if let Some(&min) = vals.first() {
        if min < -PSD_CLIP {
            return Err(Error::NotPositive(min));
        }
    }
    let diag = CVector::from_iterator(vals.len(), vals.iter().map(|&v| super::linalg::c(v.max(0.0).sqrt(), 0.0)));
    Ok(&vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint())
}

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` for two PSD matrices of equal size.
pub fn fidelity_matrices(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    // nuclear norm of sqrt(rho) sqrt(sigma); eigenvalues of s sigma s lose digits near zero
    let a = checked_sqrt_psd(rho)?;
    let b = checked_sqrt_psd(sigma)?;
    let root_sum: f64 = singular_values(&(a * b)).iter().sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// Uhlmann fidelity of two normalized states on the same layout.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.layout().dims() != sigma.layout().dims() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.layout(), sigma.layout())));
    }
    fidelity_matrices(rho.matrix(), sigma.matrix())
}

/// `1 - sqrt(F) <= ||rho - sigma||_1 / 2 <= sqrt(1 - F)` within 1e-9.
pub fn fuchs_van_de_graaf_check(rho: &DensityOperator, sigma: &DensityOperator) -> Result<bool> {
    let f = fidelity(rho, sigma)?;
    let half = 0.5 * hermitian_trace_distance(rho.matrix(), sigma.matrix());
    let slack = 1e-9;
    Ok(1.0 - f.sqrt() <= half + slack && half <= (1.0 - f).max(0.0).sqrt() + slack)
}
