//! Helpers for vectors stored as `[Complex<T>]`.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// `⟨u|v⟩`, conjugate-linear in `u`.
pub fn dot<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
}

pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn normalize<T: Real>(v: &mut [Complex<T>]) -> T {
    let n = norm(v);
    if n > T::zero() {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

pub fn kron<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        for b in v {
            out.push(a * b);
        }
    }
    out
}

pub fn basis<T: Real>(n: usize, k: usize) -> Vec<Complex<T>> {
    let mut e = vec![Complex::zero(); n];
    e[k] = Complex::new(T::one(), T::zero());
    e
}

/// Rotates the global phase so the first component with modulus above
/// `1e-8·max|v_i|` is real and positive.
pub fn fix_phase<T: Real>(v: &mut [Complex<T>]) {
    let peak = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if peak == T::zero() {
        return;
    }
    let thresh = T::lit(1e-8) * peak;
    if let Some(z) = v.iter().find(|z| z.norm() > thresh).copied() {
        let ph = z.conj() / z.norm();
        for w in v.iter_mut() {
            *w *= ph;
        }
    }
}

/// Extends an orthonormal family to an orthonormal basis of `C^dim` by
/// Gram–Schmidt on the standard basis vectors, in index order.
pub fn complete_basis<T: Real>(family: &[Vec<Complex<T>>], dim: usize) -> Vec<Vec<Complex<T>>> {
    let mut out: Vec<Vec<Complex<T>>> = family.to_vec();
    let mut k = 0;
    while out.len() < dim && k < dim {
        let mut e = basis::<T>(dim, k);
        // two passes of classical Gram–Schmidt for stability
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &e);
                for (ei, qi) in e.iter_mut().zip(q) {
                    *ei -= qi * c;
                }
            }
        }
        if normalize(&mut e) > T::lit(1e-6) {
            out.push(e);
        }
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completes_to_unitary() {
        let s = 0.5f64.sqrt();
        let fam = vec![vec![
            Complex::new(s, 0.0),
            Complex::new(0.0, s),
            Complex::zero(),
        ]];
        let b = complete_basis(&fam, 3);
        assert_eq!(b.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&b[i], &b[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - Complex::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
