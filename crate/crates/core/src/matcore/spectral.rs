//! Functions of Hermitian matrices, norms and decompositions built on the eigensolver.

use num_complex::Complex;

use super::eigen::{eig_hermitian, HermitianEigen};
use super::matrix::ComplexMatrix;
use super::{psd_tol, vector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Operator, trace and Frobenius norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms<T> {
    pub operator: T,
    pub trace: T,
    pub frobenius: T,
}

fn op_norm_of_eigs<T: Real>(e: &HermitianEigen<T>) -> T {
    e.min_value().abs().max(e.max_value().abs())
}

/// `M^p` for PSD `M`. For `p ≤ 0` the power is taken on the range only:
/// eigenvalues at or below `CUTOFF_REL·λ_max` map to zero.
pub fn frac_power<T: Real>(m: &ComplexMatrix<T>, p: T) -> Result<ComplexMatrix<T>> {
    let e = eig_hermitian(m)?;
    frac_power_from_eigen(&e, p)
}

pub fn frac_power_from_eigen<T: Real>(e: &HermitianEigen<T>, p: T) -> Result<ComplexMatrix<T>> {
    let op = op_norm_of_eigs(e);
    let lmin = e.min_value();
    if lmin < -psd_tol(op) {
        return Err(Error::NotPsd {
            min_eig: lmin.to_f64().unwrap_or(f64::NAN),
        });
    }
    let cutoff = T::CUTOFF_REL * e.max_value().max(T::zero());
    let out = e.reconstruct_with(|l| {
        if l <= cutoff {
            if p > T::zero() {
                l.max(T::zero()).powf(p)
            } else {
                T::zero()
            }
        } else {
            l.powf(p)
        }
    });
    Ok(out.hermitian_part())
}

/// Nearest PSD matrix in Frobenius norm: `Σ max(λ_k, 0) v_k v_k*`.
pub fn psd_project<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let e = eig_hermitian(m)?;
    Ok(e.reconstruct_with(|l| l.max(T::zero())).hermitian_part())
}

/// Singular values, descending.
pub fn singular_values<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let k = m.rows().min(m.cols());
    if m.is_square() && m.is_hermitian(T::epsilon() * T::lit(16.0)) {
        let mut s: Vec<T> = eig_hermitian(m)?
            .values
            .into_iter()
            .map(|x| x.abs())
            .collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return Ok(s);
    }
    let e = eig_hermitian(&embedding(m))?;
    let n = e.dim();
    Ok((0..k).map(|i| e.values[n - 1 - i].max(T::zero())).collect())
}

// [[0, M], [M*, 0]] has eigenvalues ±σ_i, so singular values come out at
// eigenvalue precision instead of the squared precision of M*M.
fn embedding<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (r, c) = (m.rows(), m.cols());
    ComplexMatrix::from_fn(r + c, r + c, |i, j| {
        if i < r && j >= r {
            m[(i, j - r)]
        } else if i >= r && j < r {
            m[(j, i - r)].conj()
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

pub fn norms<T: Real>(m: &ComplexMatrix<T>) -> Result<Norms<T>> {
    let s = singular_values(m)?;
    Ok(Norms {
        operator: s.first().copied().unwrap_or_else(T::zero),
        trace: s.iter().copied().sum(),
        frobenius: m.frobenius_norm(),
    })
}

pub fn operator_norm<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero))
}

/// One term `σ·|u⟩⟨v|` of a thin singular value decomposition.
#[derive(Clone, Debug)]
pub struct SingularTriple<T> {
    pub sigma: T,
    pub left: Vec<Complex<T>>,
    pub right: Vec<Complex<T>>,
}

/// Singular triples with `σ > CUTOFF_REL·σ_max`, descending, so that
/// `M = Σ σ_k |u_k⟩⟨v_k|`.
pub fn svd_thin<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<SingularTriple<T>>> {
    let (r, c) = (m.rows(), m.cols());
    let mut e = eig_hermitian(&embedding(m))?;
    let smax = e.max_value().max(T::zero());
    // degenerate σ blocks mix (u;v) pairs; canonicalizing keeps u's orthogonal
    e.canonicalize_degenerate(T::lit(1e-10) * smax.max(T::one()));
    let n = e.dim();
    let cutoff = T::CUTOFF_REL * smax;
    let mut out: Vec<SingularTriple<T>> = Vec::new();
    for idx in (0..n).rev() {
        let s = e.values[idx];
        if s <= cutoff || out.len() == r.min(c) {
            break;
        }
        let w = e.vector(idx);
        let mut u = w[..r].to_vec();
        let mut v = w[r..].to_vec();
        vector::normalize(&mut u);
        vector::normalize(&mut v);
        out.push(SingularTriple {
            sigma: s,
            left: u,
            right: v,
        });
    }
    // re-orthonormalize the left vectors inside degenerate groups and recompute right ones
    let mut lefts: Vec<Vec<Complex<T>>> = Vec::new();
    for t in out.iter_mut() {
        for q in &lefts {
            let cdot = vector::dot(q, &t.left);
            for (x, y) in t.left.iter_mut().zip(q) {
                *x -= y * cdot;
            }
        }
        vector::normalize(&mut t.left);
        let mut v = m.adjoint().matvec(&t.left);
        t.sigma = vector::normalize(&mut v);
        t.right = v;
        lefts.push(t.left.clone());
    }
    Ok(out)
}

/// Moore–Penrose pseudo-inverse with the global cutoff.
pub fn pinv<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let mut out = ComplexMatrix::zeros(m.cols(), m.rows());
    for t in svd_thin(m)? {
        out += &ComplexMatrix::outer(&t.right, &t.left).scale_re(T::one() / t.sigma);
    }
    Ok(out)
}

/// Four PSD parts with `a = a₁ − a₂ + i·a₃ − i·a₄`.
#[derive(Clone, Debug)]
pub struct JordanParts<T> {
    pub a1: ComplexMatrix<T>,
    pub a2: ComplexMatrix<T>,
    pub a3: ComplexMatrix<T>,
    pub a4: ComplexMatrix<T>,
}

impl<T: Real> JordanParts<T> {
    pub fn recompose(&self) -> ComplexMatrix<T> {
        let i = Complex::new(T::zero(), T::one());
        &(&self.a1 - &self.a2) + &(&self.a3 - &self.a4).scale(i)
    }
}

fn split_signed<T: Real>(h: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let e = eig_hermitian(h)?;
    Ok((
        e.reconstruct_with(|l| l.max(T::zero())).hermitian_part(),
        e.reconstruct_with(|l| (-l).max(T::zero())).hermitian_part(),
    ))
}

pub fn jordan_decompose<T: Real>(a: &ComplexMatrix<T>) -> Result<JordanParts<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "Jordan decomposition needs a square matrix".into(),
        ));
    }
    let half = T::lit(0.5);
    let re = a.hermitian_part();
    let im = ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        (a[(i, j)] - a[(j, i)].conj()) * Complex::new(T::zero(), -half)
    });
    let (a1, a2) = split_signed(&re)?;
    let (a3, a4) = split_signed(&im)?;
    Ok(JordanParts { a1, a2, a3, a4 })
}
