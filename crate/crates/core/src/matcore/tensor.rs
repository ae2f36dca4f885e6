//! Tensor-product structure of `H_A ⊗ H_B` with the index convention `i·dB + k`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Factor dimensions of a bipartite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorSplit {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
}

impl FactorSplit {
    pub fn new(d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::BadParameter(format!(
                "factor dimensions must be ≥ 1, got {d_a}x{d_b}"
            )));
        }
        Ok(Self { d_a, d_b })
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    fn check<T: Real>(&self, m: &ComplexMatrix<T>) -> Result<()> {
        if !m.is_square() || m.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {0}x{0} matrix for split {1}x{2}, got {3}x{4}",
                self.dim(),
                self.d_a,
                self.d_b,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for FactorSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.d_a, self.d_b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// `(A⊗B)[(i·rB+k),(j·cB+l)] = A[i,j]·B[k,l]`.
pub fn tensor_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * rb, a.cols() * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Traces out one factor.
pub fn partial_trace<T: Real>(
    m: &ComplexMatrix<T>,
    split: FactorSplit,
    factor: Subsystem,
) -> Result<ComplexMatrix<T>> {
    split.check(m)?;
    let (da, db) = (split.d_a, split.d_b);
    Ok(match factor {
        Subsystem::B => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).fold(Complex::zero(), |acc, k| acc + m[(i * db + k, j * db + k)])
        }),
        Subsystem::A => ComplexMatrix::from_fn(db, db, |k, l| {
            (0..da).fold(Complex::zero(), |acc, i| acc + m[(i * db + k, i * db + l)])
        }),
    })
}

/// Transposition of one factor in the computational basis.
pub fn partial_transpose<T: Real>(
    m: &ComplexMatrix<T>,
    split: FactorSplit,
    factor: Subsystem,
) -> Result<ComplexMatrix<T>> {
    split.check(m)?;
    Ok(partial_transpose_unchecked(m, split, factor))
}

pub(crate) fn partial_transpose_unchecked<T: Real>(
    m: &ComplexMatrix<T>,
    split: FactorSplit,
    factor: Subsystem,
) -> ComplexMatrix<T> {
    let db = split.d_b;
    let n = split.dim();
    ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        match factor {
            Subsystem::B => m[(i * db + l, j * db + k)],
            Subsystem::A => m[(j * db + k, i * db + l)],
        }
    })
}
