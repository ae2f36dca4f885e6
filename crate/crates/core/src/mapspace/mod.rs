//! Linear maps `M_{d_in} → M_{d_out}` stored by their Choi matrix
//! `Σ_ij E_ij ⊗ m(E_ij)`.

mod classify;
mod pairing;

pub use classify::{
    classify, classify_cp, is_decomposable, is_positive_map, CpVerdict, DecompOptions,
    Decomposability, MapClassification, Positivity, SearchBudget,
};
pub use pairing::{
    assemble, cp_criterion_check, kraus_factors, pair_map_functional, pair_with_tensor,
    projective_norm_ub, CriterionReport, PairingConvention,
};

use crate::matcore::{partial_transpose_unchecked, ComplexMatrix, FactorSplit, Subsystem};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    d_in: usize,
    d_out: usize,
    choi: CMat,
}

impl LinearMap {
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMat) -> Result<Self> {
        if d_in == 0 || d_out == 0 || !choi.is_square() || choi.rows() != d_in * d_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix {}x{} does not fit a map M_{d_in} → M_{d_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    /// Assembles the Choi matrix from the images of the matrix units.
    pub fn from_fn(d_in: usize, d_out: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let n = d_in * d_out;
        let mut choi = CMat::zeros(n, n);
        for i in 0..d_in {
            for j in 0..d_in {
                let img = f(&CMat::unit(d_in, i, j));
                assert_eq!(
                    (img.rows(), img.cols()),
                    (d_out, d_out),
                    "map image has wrong shape"
                );
                for p in 0..d_out {
                    for q in 0..d_out {
                        choi[(i * d_out + p, j * d_out + q)] = img[(p, q)];
                    }
                }
            }
        }
        Self { d_in, d_out, choi }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.clone())
    }

    pub fn transposition(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.transpose())
    }

    /// Keeps the diagonal, zeroes the rest.
    pub fn pinching(d: usize) -> Self {
        Self::from_fn(d, d, |x| {
            ComplexMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    x[(i, j)]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
    }

    /// `X ↦ Σ_k V_k X V_k*`.
    pub fn from_kraus(ops: &[CMat]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::BadParameter("empty Kraus family".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if ops.iter().any(|v| v.rows() != d_out || v.cols() != d_in) {
            return Err(Error::DimensionMismatch(
                "Kraus operators of differing shapes".into(),
            ));
        }
        Ok(Self::from_fn(d_in, d_out, |x| {
            let mut out = CMat::zeros(d_out, d_out);
            for v in ops {
                out += &v.matmul(x).matmul(&v.adjoint());
            }
            out
        }))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn into_choi(self) -> CMat {
        self.choi
    }

    pub(crate) fn split(&self) -> FactorSplit {
        FactorSplit {
            d_a: self.d_in,
            d_b: self.d_out,
        }
    }

    /// `m(E_ij)`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> CMat {
        let d = self.d_out;
        CMat::from_fn(d, d, |p, q| self.choi[(i * d + p, j * d + q)])
    }

    /// `m(X) = Σ X_ij m(E_ij)`.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.rows() != self.d_in || x.cols() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "map expects {0}x{0} input, got {1}x{2}",
                self.d_in,
                x.rows(),
                x.cols()
            )));
        }
        let d = self.d_out;
        let mut out = CMat::zeros(d, d);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let c = x[(i, j)];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..d {
                    for q in 0..d {
                        out[(p, q)] += c * self.choi[(i * d + p, j * d + q)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `t∘m`; its Choi matrix is the output-side partial transpose.
    pub fn then_transpose(&self) -> Self {
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            choi: partial_transpose_unchecked(&self.choi, self.split(), Subsystem::B),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return Err(Error::DimensionMismatch(
                "adding maps of different shapes".into(),
            ));
        }
        Ok(Self {
            d_in: self.d_in,
            d_out: self.d_out,
            choi: &self.choi + &other.choi,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            choi: self.choi.scale_re(s),
        }
    }

    pub fn is_hermitian_preserving(&self) -> bool {
        self.choi.is_hermitian(1e-12)
    }
}
