//! Dense complex linear algebra: the matrix type, a Jacobi eigensolver, and
//! the tensor-product primitives every other module builds on.

mod eigen;
mod matrix;
mod spectral;
mod tensor;
pub mod vector;

use std::sync::atomic::{AtomicU64, Ordering};

pub use eigen::{eig_hermitian, eigvals_hermitian, HermitianEigen};
pub use matrix::ComplexMatrix;
pub use spectral::{
    frac_power, frac_power_from_eigen, jordan_decompose, norms, operator_norm, pinv, psd_project,
    singular_values, svd_thin, JordanParts, Norms, SingularTriple,
};
pub(crate) use tensor::partial_transpose_unchecked;
pub use tensor::{partial_trace, partial_transpose, tensor_product, FactorSplit, Subsystem};

use crate::scalar::Real;

const DEFAULT_PSD_FACTOR: f64 = 1e-9;
static PSD_FACTOR_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Relative factor of the PSD tolerance `tol_psd = factor·max(1, ‖M‖_op)`.
pub fn psd_factor() -> f64 {
    f64::from_bits(PSD_FACTOR_BITS.load(Ordering::Relaxed))
}

/// Sets the process-wide PSD tolerance factor (default `1e-9`).
pub fn set_psd_factor(factor: f64) {
    let f = if factor.is_finite() && factor > 0.0 {
        factor
    } else {
        DEFAULT_PSD_FACTOR
    };
    PSD_FACTOR_BITS.store(f.to_bits(), Ordering::Relaxed);
}

/// `tol_psd` for a matrix of operator norm `op`.
pub fn psd_tol<T: Real>(op: T) -> T {
    T::lit(psd_factor()).max(T::PSD_FLOOR) * op.max(T::one())
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eig<T: Real>(m: &ComplexMatrix<T>) -> crate::error::Result<T> {
    Ok(eig_hermitian(m)?.min_value())
}

/// PSD check within `tol_psd`; returns the verdict and the minimum eigenvalue.
pub fn is_psd<T: Real>(m: &ComplexMatrix<T>) -> crate::error::Result<(bool, T)> {
    let e = eig_hermitian(m)?;
    let op = e.min_value().abs().max(e.max_value().abs());
    Ok((e.min_value() >= -psd_tol(op), e.min_value()))
}
