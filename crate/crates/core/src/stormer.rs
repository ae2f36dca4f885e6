//! 2×2 operator blocks `[a_i* a_j]`: the Størmer condition, Zhan's
//! contraction criterion, and the canonical separable decomposition when
//! `a₂ a₁⁻¹` is normal.

use std::cmp::Ordering;

use serde::Serialize;

use crate::matcore::{
    eig_hermitian, frac_power, is_psd, operator_norm, pinv, svd_thin, tensor_product, vector,
};
use crate::rng;
use crate::{CMat, Error, Result, C64};

/// Relative tolerance for the reconstruction identities.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
/// `‖NN* − N*N‖_F ≤ NORMALITY_TOL·‖N‖²`.
pub const NORMALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StormerPair {
    pub a1: CMat,
    pub a2: CMat,
}

/// Assembles `[[a, b], [c, d]]` from equal square blocks.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let n = a.rows();
    CMat::from_fn(2 * n, 2 * n, |i, j| {
        let blk = match (i / n, j / n) {
            (0, 0) => a,
            (0, 1) => b,
            (1, 0) => c,
            _ => d,
        };
        blk[(i % n, j % n)]
    })
}

impl StormerPair {
    pub fn new(a1: CMat, a2: CMat) -> Result<Self> {
        if !a1.is_square() || a1.rows() != a2.rows() || a1.cols() != a2.cols() {
            return Err(Error::DimensionMismatch(format!(
                "Størmer pair needs equal square blocks, got {}x{} and {}x{}",
                a1.rows(),
                a1.cols(),
                a2.rows(),
                a2.cols()
            )));
        }
        Ok(Self { a1, a2 })
    }

    pub fn dim(&self) -> usize {
        self.a1.rows()
    }

    /// `[[a₁*a₁, a₁*a₂], [a₂*a₁, a₂*a₂]]`.
    pub fn block_matrix(&self) -> CMat {
        let (a1s, a2s) = (self.a1.adjoint(), self.a2.adjoint());
        block2(
            &a1s.matmul(&self.a1),
            &a1s.matmul(&self.a2),
            &a2s.matmul(&self.a1),
            &a2s.matmul(&self.a2),
        )
    }

    /// Block transpose `[[a₁*a₁, a₂*a₁], [a₁*a₂, a₂*a₂]]`.
    pub fn transposed_block(&self) -> CMat {
        let (a1s, a2s) = (self.a1.adjoint(), self.a2.adjoint());
        block2(
            &a1s.matmul(&self.a1),
            &a2s.matmul(&self.a1),
            &a1s.matmul(&self.a2),
            &a2s.matmul(&self.a2),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StormerVerdict {
    pub block_psd: bool,
    pub transposed_psd: bool,
    pub min_eig_block: f64,
    pub min_eig_transposed: f64,
}

impl StormerVerdict {
    pub fn holds(&self) -> bool {
        self.block_psd && self.transposed_psd
    }
}

pub fn stormer_condition(p: &StormerPair) -> Result<StormerVerdict> {
    let (block_psd, min_eig_block) = is_psd(&p.block_matrix().hermitian_part())?;
    let (transposed_psd, min_eig_transposed) = is_psd(&p.transposed_block().hermitian_part())?;
    Ok(StormerVerdict {
        block_psd,
        transposed_psd,
        min_eig_block,
        min_eig_transposed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZhanFactor {
    pub w: CMat,
    pub w_norm: f64,
    pub is_contraction: bool,
    /// `‖B − A^{1/2}WC^{1/2}‖_F`; nonzero when `B` leaves the ranges.
    pub factor_residual: f64,
    /// Direct eigensolve of `[[A, B], [B*, C]]`.
    pub block_psd: bool,
    pub verdicts_agree: bool,
}

/// `W = pinv(A^{1/2})·B·pinv(C^{1/2})`; the block `[[A,B],[B*,C]]` is PSD
/// iff `W` is a contraction that reproduces `B`.
pub fn zhan_factor(a: &CMat, b: &CMat, c: &CMat) -> Result<ZhanFactor> {
    let n = a.rows();
    for (name, m) in [("A", a), ("B", b), ("C", c)] {
        if !m.is_square() || m.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.rows(),
                m.cols()
            )));
        }
    }
    for m in [a, c] {
        let (ok, min) = is_psd(&m.hermitian_part())?;
        if !ok {
            return Err(Error::NotPsd { min_eig: min });
        }
    }
    let ah = frac_power(a, 0.5)?;
    let ch = frac_power(c, 0.5)?;
    let w = pinv(&ah)?.matmul(b).matmul(&pinv(&ch)?);
    let w_norm = operator_norm(&w)?;
    let factor_residual = b.distance(&ah.matmul(&w).matmul(&ch));
    let is_contraction = w_norm <= 1.0 + 1e-9;
    let block = block2(a, b, &b.adjoint(), c);
    let (block_psd, _) = is_psd(&block.hermitian_part())?;
    let scale = block.frobenius_norm().max(1.0);
    let zhan_verdict = is_contraction && factor_residual <= 1e-9 * scale;
    Ok(ZhanFactor {
        w,
        w_norm,
        is_contraction,
        factor_residual,
        block_psd,
        verdicts_agree: zhan_verdict == block_psd,
    })
}

/// One summand `α²·Λ⊗|φ⟩⟨φ|` of the canonical decomposition, with
/// `Λ = [[1, λ], [λ̄, |λ|²]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StormerTerm {
    pub lambda: C64,
    pub e: Vec<C64>,
    pub alpha: f64,
    pub phi: Vec<C64>,
}

impl StormerTerm {
    pub fn coefficient(&self) -> CMat {
        let l = self.lambda;
        CMat::new(
            2,
            2,
            vec![C64::new(1.0, 0.0), l, l.conj(), C64::new(l.norm_sqr(), 0.0)],
        )
        .expect("2x2")
    }

    /// `Λ/(1+|λ|²)`, a rank-one projector.
    pub fn projector(&self) -> CMat {
        self.coefficient()
            .scale_re(1.0 / (1.0 + self.lambda.norm_sqr()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StormerDecomposition {
    /// `a₂·a₁⁻¹` (generalized inverse when `a₁` is singular).
    pub n: CMat,
    pub normality_residual: f64,
    pub terms: Vec<StormerTerm>,
    /// Relative residuals of `a₂ = Σ λ_i|e_i⟩⟨a₁*e_i|` and of the block identity.
    pub a2_residual: f64,
    pub block_residual: f64,
    /// Residual of `Σ α_i²(1+|λ_i|²) P_i⊗|φ_i⟩⟨φ_i|` against the block matrix.
    pub separable_residual: f64,
    /// `a₁` was singular; only its range was decomposed.
    pub partial: bool,
}

impl StormerDecomposition {
    pub fn lambdas(&self) -> Vec<C64> {
        self.terms.iter().map(|t| t.lambda).collect()
    }

    /// `Σ α_i² Λ_i⊗|φ_i⟩⟨φ_i|`, each summand a product of PSD factors.
    pub fn separable_form(&self) -> CMat {
        let d = self.n.rows();
        let mut acc = CMat::zeros(2 * d, 2 * d);
        for t in &self.terms {
            let w = t.alpha * t.alpha * (1.0 + t.lambda.norm_sqr());
            acc += &tensor_product(&t.projector(), &CMat::outer(&t.phi, &t.phi)).scale_re(w);
        }
        acc
    }
}

/// `(|λ|, arg λ)` lexicographic.
fn lambda_order(a: &C64, b: &C64) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > 1e-12 * ma.max(mb).max(1.0) {
        return ma.partial_cmp(&mb).unwrap_or(Ordering::Equal);
    }
    a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal)
}

/// Orthonormal eigenbasis of a normal matrix, found by diagonalizing the
/// commuting Hermitian combination `Re N + c·Im N` at an irrational `c`.
fn normal_eigen(n: &CMat) -> Result<Vec<(C64, Vec<C64>)>> {
    let re = n.hermitian_part();
    let im = CMat::from_fn(n.rows(), n.cols(), |i, j| {
        (n[(i, j)] - n[(j, i)].conj()) * C64::new(0.0, -0.5)
    });
    let c = std::f64::consts::FRAC_1_SQRT_2 * std::f64::consts::E;
    let e = eig_hermitian(&(&re + &im.scale_re(c)))?;
    let mut out: Vec<(C64, Vec<C64>)> = (0..e.dim())
        .map(|k| {
            let v = e.vector(k);
            (n.sandwich(&v, &v), v)
        })
        .collect();
    out.sort_by(|a, b| lambda_order(&a.0, &b.0));
    Ok(out)
}

fn relative(a: &CMat, b: &CMat) -> f64 {
    a.distance(b) / a.frobenius_norm().max(1.0)
}

/// Spectral form of `N = a₂a₁⁻¹` and the separable decomposition of the block matrix.
pub fn canonical_decomposition(p: &StormerPair) -> Result<StormerDecomposition> {
    let v = stormer_condition(p)?;
    if !v.holds() {
        return Err(Error::ConditionFails {
            block: v.min_eig_block,
            transposed: v.min_eig_transposed,
        });
    }
    let d = p.dim();
    let svd = svd_thin(&p.a1)?;
    let partial = svd.len() < d;
    let n = p.a2.matmul(&pinv(&p.a1)?);
    // on a singular a₁ only the range of a₁ carries information
    let (n_eff, basis) = if partial {
        let q = CMat::from_columns(&svd.iter().map(|t| t.left.clone()).collect::<Vec<_>>());
        (q.adjoint().matmul(&n).matmul(&q), Some(q))
    } else {
        (n.clone(), None)
    };
    let comm = &n_eff.matmul(&n_eff.adjoint()) - &n_eff.adjoint().matmul(&n_eff);
    let nn = n_eff.frobenius_norm();
    let normality_residual = comm.frobenius_norm() / (nn * nn).max(1e-300);
    if nn > 0.0 && normality_residual > NORMALITY_TOL {
        return Err(Error::NormalityFails {
            residual: normality_residual,
        });
    }
    let a1s = p.a1.adjoint();
    let terms: Vec<StormerTerm> = normal_eigen(&n_eff)?
        .into_iter()
        .map(|(lambda, ev)| {
            let e = match &basis {
                Some(q) => q.matvec(&ev),
                None => ev,
            };
            let mut phi = a1s.matvec(&e);
            let alpha = vector::normalize(&mut phi);
            StormerTerm {
                lambda,
                e,
                alpha,
                phi,
            }
        })
        .collect();
    let mut a2_rec = CMat::zeros(d, d);
    let mut block_rec = CMat::zeros(2 * d, 2 * d);
    for t in &terms {
        let a1e = a1s.matvec(&t.e);
        a2_rec += &CMat::outer(&t.e, &a1e).scale(t.lambda);
        block_rec += &tensor_product(&t.coefficient(), &CMat::outer(&t.phi, &t.phi))
            .scale_re(t.alpha * t.alpha);
    }
    let block = p.block_matrix();
    let mut dec = StormerDecomposition {
        n,
        normality_residual,
        a2_residual: relative(&p.a2, &a2_rec),
        block_residual: relative(&block, &block_rec),
        separable_residual: 0.0,
        terms,
        partial,
    };
    dec.separable_residual = relative(&block, &dec.separable_form());
    Ok(dec)
}

/// `max_g (‖(a₁*)⁻¹a₂*g‖ − ‖a₂a₁⁻¹g‖)` over random unit `g`; nonpositive
/// (up to roundoff) whenever the transposed block is PSD.
pub fn hyponormality_gap(p: &StormerPair, trials: usize, seed: u64) -> Result<f64> {
    let inv = pinv(&p.a1)?;
    let lhs_op = inv.adjoint().matmul(&p.a2.adjoint());
    let rhs_op = p.a2.matmul(&inv);
    let mut r = rng::seeded(seed);
    let mut gap = f64::NEG_INFINITY;
    for _ in 0..trials {
        let g = rng::random_unit_vector(&mut r, p.dim());
        gap = gap.max(vector::norm(&lhs_op.matvec(&g)) - vector::norm(&rhs_op.matvec(&g)));
    }
    Ok(gap)
}

/// Pair `(a₁, N·a₁)` with a random full-rank `a₁` and random normal `N`.
pub fn random_normal_pair(d: usize, seed: u64) -> StormerPair {
    let mut r = rng::seeded(seed);
    let a1 = rng::ginibre(&mut r, d, d);
    let u = rng::haar_unitary(&mut r, d);
    let lambdas: Vec<C64> = (0..d).map(|_| rng::complex_normal(&mut r)).collect();
    let diag = CMat::from_fn(d, d, |i, j| {
        if i == j {
            lambdas[i]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let n = u.matmul(&diag).matmul(&u.adjoint());
    let a2 = n.matmul(&a1);
    StormerPair { a1, a2 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResplitReport {
    pub trials: usize,
    pub summands_checked: usize,
    /// Rank-one summands `[b_i* b_j]` whose block transpose is not PSD.
    pub summands_failing: usize,
}

/// Experiment: writes the block matrix `V*V` (with `V = [a₁ a₂]`) as
/// `Σ_k (row_k QV)*(row_k QV)` for random unitaries `Q` and counts the
/// rank-one summands that violate the condition although the sum satisfies it.
pub fn resplit_experiment(p: &StormerPair, trials: usize, seed: u64) -> Result<ResplitReport> {
    let d = p.dim();
    let v = CMat::from_fn(d, 2 * d, |i, j| {
        if j < d {
            p.a1[(i, j)]
        } else {
            p.a2[(i, j - d)]
        }
    });
    let mut r = rng::seeded(seed);
    let mut failing = 0;
    let mut checked = 0;
    for _ in 0..trials {
        let qv = rng::haar_unitary(&mut r, d).matmul(&v);
        for k in 0..d {
            let b1 = CMat::from_fn(1, d, |_, j| qv[(k, j)]);
            let b2 = CMat::from_fn(1, d, |_, j| qv[(k, d + j)]);
            let (b1s, b2s) = (b1.adjoint(), b2.adjoint());
            let t = block2(
                &b1s.matmul(&b1),
                &b2s.matmul(&b1),
                &b1s.matmul(&b2),
                &b2s.matmul(&b2),
            );
            checked += 1;
            if !is_psd(&t.hermitian_part())?.0 {
                failing += 1;
            }
        }
    }
    Ok(ResplitReport {
        trials,
        summands_checked: checked,
        summands_failing: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nilpotent() -> CMat {
        CMat::unit(2, 0, 1)
    }

    #[test]
    fn normal_partner_satisfies_condition() {
        let n = CMat::new(
            2,
            2,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, 2.0),
                C64::new(0.0, 2.0),
                C64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let v = stormer_condition(&StormerPair::new(CMat::identity(2), n).unwrap()).unwrap();
        assert!(v.holds());
    }

    #[test]
    fn nilpotent_breaks_transposed_block() {
        let v =
            stormer_condition(&StormerPair::new(CMat::identity(2), nilpotent()).unwrap()).unwrap();
        assert!(v.block_psd && !v.transposed_psd);
        let err =
            canonical_decomposition(&StormerPair::new(CMat::identity(2), nilpotent()).unwrap())
                .unwrap_err();
        assert!(matches!(err, Error::ConditionFails { .. }));
    }

    #[test]
    fn zero_partner() {
        let v = stormer_condition(
            &StormerPair::new(rng::ginibre(&mut rng::seeded(1), 3, 3), CMat::zeros(3, 3)).unwrap(),
        )
        .unwrap();
        assert!(v.holds());
    }

    #[test]
    fn zhan_basic_cases() {
        let i = CMat::identity(2);
        let z = zhan_factor(&i, &i.scale_re(0.5), &i).unwrap();
        assert!(z.w.max_abs_diff(&i.scale_re(0.5)) < 1e-12 && z.is_contraction && z.block_psd);
        let z = zhan_factor(&i, &i.scale_re(2.0), &i).unwrap();
        assert!(
            (z.w_norm - 2.0).abs() < 1e-12 && !z.is_contraction && !z.block_psd && z.verdicts_agree
        );
        assert!(matches!(
            zhan_factor(&i.scale_re(-1.0), &i, &i),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn zhan_on_gram_blocks() {
        let mut r = rng::seeded(2);
        for _ in 0..20 {
            let x = rng::ginibre(&mut r, 3, 3);
            let y = rng::ginibre(&mut r, 3, 3);
            let z = zhan_factor(
                &x.adjoint().matmul(&x),
                &x.adjoint().matmul(&y),
                &y.adjoint().matmul(&y),
            )
            .unwrap();
            assert!(z.is_contraction && z.block_psd && z.verdicts_agree);
            assert!(z.factor_residual <= 1e-10 * (1.0 + x.frobenius_norm() * y.frobenius_norm()));
        }
    }

    #[test]
    fn diagonal_decomposition() {
        let a2 = CMat::new(
            2,
            2,
            vec![
                C64::new(2.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 3.0),
            ],
        )
        .unwrap();
        let dec =
            canonical_decomposition(&StormerPair::new(CMat::identity(2), a2).unwrap()).unwrap();
        assert_eq!(dec.lambdas().len(), 2);
        assert!((dec.terms[0].lambda - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((dec.terms[1].lambda - C64::new(0.0, 3.0)).norm() < 1e-12);
        for t in &dec.terms {
            assert!((t.alpha - 1.0).abs() < 1e-12);
        }
        assert!(dec.terms[0].e[0].norm() > 1.0 - 1e-12 && dec.terms[1].e[1].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn random_normal_pairs_reconstruct() {
        for seed in 0..10 {
            let p = random_normal_pair(3, seed);
            let dec = canonical_decomposition(&p).unwrap();
            assert!(!dec.partial);
            assert!(dec.a2_residual <= RECONSTRUCTION_TOL, "{}", dec.a2_residual);
            assert!(dec.block_residual <= RECONSTRUCTION_TOL);
            assert!(dec.separable_residual <= RECONSTRUCTION_TOL);
            for t in &dec.terms {
                let pr = t.projector();
                assert!(pr.matmul(&pr).max_abs_diff(&pr) < 1e-12);
            }
            assert!(hyponormality_gap(&p, 100, seed).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn singular_a1_is_partial() {
        let a1 = CMat::from_real_diag(&[1.0, 0.0]);
        let a2 = CMat::from_real_diag(&[2.0, 0.0]);
        let dec = canonical_decomposition(&StormerPair::new(a1, a2).unwrap()).unwrap();
        assert!(dec.partial && dec.a2_residual < 1e-12);
    }

    #[test]
    fn resplit_summands_are_counted() {
        let rep = resplit_experiment(&random_normal_pair(2, 4), 5, 1).unwrap();
        assert_eq!(rep.summands_checked, 10);
    }
}
