//! Seeded random ensembles. Every generator draws from a `ChaCha8Rng`, and
//! batch instances get independent streams via [`derive_seed`].

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{vector, ComplexMatrix};

pub type WorkbenchRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> WorkbenchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for instance `index` of a run with master seed `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Stream for instance `index` of a run.
pub fn instance_rng(master: u64, index: u64) -> WorkbenchRng {
    seeded(derive_seed(master, index))
}

/// Standard complex Gaussian `(x + iy)/√2`.
pub fn complex_normal<R: Rng + ?Sized>(r: &mut R) -> Complex<f64> {
    let x: f64 = r.sample(StandardNormal);
    let y: f64 = r.sample(StandardNormal);
    Complex::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(r: &mut R, rows: usize, cols: usize) -> ComplexMatrix<f64> {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(r))
}

pub fn random_vector<R: Rng + ?Sized>(r: &mut R, n: usize) -> Vec<Complex<f64>> {
    (0..n).map(|_| complex_normal(r)).collect()
}

/// Uniform on the unit sphere of `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(r: &mut R, n: usize) -> Vec<Complex<f64>> {
    loop {
        let mut v = random_vector(r, n);
        if vector::normalize(&mut v) > 1e-12 {
            return v;
        }
    }
}

/// `(G + G*)/2` for Ginibre `G`.
pub fn random_hermitian<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix<f64> {
    ginibre(r, n, n).hermitian_part()
}

/// `G·G*` with `G` of shape `n × rank`.
pub fn wishart<R: Rng + ?Sized>(r: &mut R, n: usize, rank: usize) -> ComplexMatrix<f64> {
    let g = ginibre(r, n, rank);
    g.matmul(&g.adjoint()).hermitian_part()
}

/// Haar unitary: Gram–Schmidt of a Ginibre matrix's columns, which equals
/// the QR factor with positive diagonal in `R`.
pub fn haar_unitary<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix<f64> {
    loop {
        let g = ginibre(r, n, n);
        let mut cols: Vec<Vec<Complex<f64>>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for q in &cols {
                    let c = vector::dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= qi * c;
                    }
                }
            }
            if vector::normalize(&mut v) < 1e-10 {
                ok = false;
                break;
            }
            cols.push(v);
        }
        if ok {
            return ComplexMatrix::from_columns(&cols);
        }
    }
}

/// Density matrix of the given rank, trace one.
pub fn random_density_matrix<R: Rng + ?Sized>(
    r: &mut R,
    dim: usize,
    rank: usize,
) -> ComplexMatrix<f64> {
    let w = wishart(r, dim, rank);
    let t = w.trace().re;
    w.scale_re(1.0 / t)
}
