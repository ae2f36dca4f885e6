//! Cyclic complex Jacobi eigensolver for Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `M = V diag(values) V*`, values ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Eigenvectors as columns.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        self.vectors.column(k)
    }

    pub fn min_value(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// `Σ f(λ_k) v_k v_k*`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let w = f(self.values[k]);
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                if vi.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.reconstruct_with(|x| x)
    }

    /// Replaces each block of eigenvalues closer than `tol` by a basis that
    /// depends only on the block's eigenspace: the standard basis vectors are
    /// projected onto the space in index order and Gram–Schmidt orthonormalized.
    pub fn canonicalize_degenerate(&mut self, tol: T) {
        let n = self.dim();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && self.values[end] - self.values[end - 1] <= tol {
                end += 1;
            }
            if end - start > 1 {
                let block: Vec<Vec<Complex<T>>> = (start..end).map(|k| self.vector(k)).collect();
                let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(block.len());
                for e in 0..n {
                    if basis.len() == block.len() {
                        break;
                    }
                    // projection of e_e onto span(block)
                    let mut p = vec![Complex::zero(); n];
                    for b in &block {
                        let c = b[e].conj();
                        for (pi, bi) in p.iter_mut().zip(b) {
                            *pi += bi * c;
                        }
                    }
                    for q in &basis {
                        let c = super::vector::dot(q, &p);
                        for (pi, qi) in p.iter_mut().zip(q) {
                            *pi -= qi * c;
                        }
                    }
                    let nrm = super::vector::norm(&p);
                    if nrm > T::lit(1e-6) {
                        basis.push(p.into_iter().map(|z| z / nrm).collect());
                    }
                }
                let mean = (start..end).map(|k| self.values[k]).sum::<T>()
                    / T::from_usize(end - start).unwrap();
                for (off, v) in basis.iter().enumerate() {
                    self.vectors.set_column(start + off, v);
                    self.values[start + off] = mean;
                }
            }
            start = end;
        }
        for k in 0..n {
            let mut v = self.vector(k);
            super::vector::fix_phase(&mut v);
            self.vectors.set_column(k, &v);
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Inputs within `HERMITIAN_REL_TOL` of Hermitian are symmetrized first.
/// Each eigenvector's first non-negligible component is made real positive.
pub fn eig_hermitian<T: Real>(m: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let fro = m.frobenius_norm();
    let asym = m.asymmetry();
    if asym > T::HERMITIAN_REL_TOL * fro.max(T::min_positive_value()) {
        return Err(Error::NotHermitian {
            asymmetry: (asym / fro).to_f64().unwrap_or(f64::INFINITY),
        });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = T::zero();
    }
    let mut v = ComplexMatrix::identity(n);
    let target = T::EIG_REL_TOL * fro;

    let mut converged = n <= 1 || fro == T::zero();
    let mut sweeps = 0;
    while !converged {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        if sweeps == MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap()
            .then(i.cmp(&j))
    });
    let values: Vec<T> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        super::vector::fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only.
pub fn eigvals_hermitian<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<T>> {
    eig_hermitian(m).map(|e| e.values)
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

// Annihilates a[p][q] with the unitary V2 = D·R, where D = diag(1, e^{-iφ})
// removes the phase of a[p][q] and R is the real Jacobi rotation.
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == T::zero() {
        return;
    }
    let alpha = a[(p, p)].re;
    let beta = a[(q, q)].re;
    let theta = (beta - alpha) / (T::lit(2.0) * g);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let s = if theta >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        s / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    if t == T::zero() {
        // diagonal gap dwarfs the coupling; the entry is already below rounding
        a[(p, q)] = Complex::zero();
        a[(q, p)] = Complex::zero();
        return;
    }
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let phase = apq / g; // e^{iφ}
    let ph_conj = phase.conj();
    // V2 = [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
    let v00 = Complex::new(c, T::zero());
    let v01 = Complex::new(s, T::zero());
    let v10 = ph_conj * (-s);
    let v11 = ph_conj * c;
    let n = a.rows();

    // A ← A·V
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * v00 + akq * v10;
        a[(k, q)] = akp * v01 + akq * v11;
    }
    // A ← V*·A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = v00.conj() * apk + v10.conj() * aqk;
        a[(q, k)] = v01.conj() * apk + v11.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)].im = T::zero();
    a[(q, q)].im = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * v00 + vkq * v10;
        v[(k, q)] = vkp * v01 + vkq * v11;
    }
}
