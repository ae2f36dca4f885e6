//! Real scalar abstraction for the dense linear algebra layer.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type usable as the real part of matrix entries.
///
/// The associated constants are the relative tolerances the matrix kernels
/// use. They are per-type because an `f32` Jacobi sweep cannot reach the
/// `f64` off-diagonal target.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Jacobi stops once the off-diagonal Frobenius mass falls below this times `‖M‖_F`.
    const EIG_REL_TOL: Self;
    /// Largest accepted `‖M − M*‖_F / ‖M‖_F` for inputs declared Hermitian.
    const HERMITIAN_REL_TOL: Self;
    /// Eigenvalues at or below this times `λ_max` are treated as zero by pseudo-powers.
    const CUTOFF_REL: Self;
    /// Smallest PSD tolerance factor this precision can honor.
    const PSD_FLOOR: Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

macro_rules! impl_real {
    ($t:ty, $eig:expr, $herm:expr, $cut:expr, $floor:expr) => {
        impl Real for $t {
            const EIG_REL_TOL: Self = $eig;
            const HERMITIAN_REL_TOL: Self = $herm;
            const CUTOFF_REL: Self = $cut;
            const PSD_FLOOR: Self = $floor;
        }
    };
}

impl_real!(f64, 1e-13, 1e-12, 1e-12, 0.0);
impl_real!(f32, 1e-6, 1e-5, 1e-6, 1e-5);
