use serde::Serialize;

use super::LinearMap;
use crate::matcore::{
    eig_hermitian, norms, operator_norm, partial_transpose_unchecked, tensor_product, Subsystem,
};
use crate::rng;
use crate::{CMat, Error, Result, C64};

/// How a map pairs with an element `Σ a_i ⊗ b_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingConvention {
    /// `Σ Tr(m(a_i)·b_iᵗ)`.
    Projective,
    /// `Σ Tr(m(a_i)·b_i)`.
    Injective,
}

/// Pairing with an element given as a list of simple tensors.
pub fn pair_map_functional(
    m: &LinearMap,
    element: &[(CMat, CMat)],
    convention: PairingConvention,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in element {
        if b.rows() != m.d_out() || b.cols() != m.d_out() {
            return Err(Error::DimensionMismatch(format!(
                "second factor is {}x{}, map output is {}",
                b.rows(),
                b.cols(),
                m.d_out()
            )));
        }
        let img = m.apply(a)?;
        let b = match convention {
            PairingConvention::Projective => b.transpose(),
            PairingConvention::Injective => b.clone(),
        };
        acc += img.matmul(&b).trace();
    }
    Ok(acc)
}

/// Pairing with an assembled tensor `W` on `C^{d_in} ⊗ C^{d_out}`. For the
/// projective convention this is `Σ_rc Choi[r,c]·W[r,c]`.
pub fn pair_with_tensor(m: &LinearMap, w: &CMat, convention: PairingConvention) -> Result<C64> {
    if !w.is_square() || w.rows() != m.choi().rows() {
        return Err(Error::DimensionMismatch(format!(
            "tensor of side {} for a map with Choi side {}",
            w.rows(),
            m.choi().rows()
        )));
    }
    let w = match convention {
        PairingConvention::Projective => w.clone(),
        PairingConvention::Injective => partial_transpose_unchecked(w, m.split(), Subsystem::B),
    };
    Ok(m.choi()
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .map(|(c, x)| c * x)
        .sum())
}

/// Factors `V_k` (shape `d_out × d_in`) with `m(X) = Σ V_k X V_k*`, one per
/// nonzero Choi eigenvalue.
pub fn kraus_factors(m: &LinearMap) -> Result<Vec<CMat>> {
    let v = super::classify_cp(m)?;
    if !v.cp {
        return Err(Error::NotCp {
            min_eig: v.min_choi_eig,
        });
    }
    let e = eig_hermitian(&m.choi().hermitian_part())?;
    let cutoff = 1e-12 * e.max_value().max(0.0);
    let (din, dout) = (m.d_in(), m.d_out());
    let mut out = Vec::new();
    for k in (0..e.dim()).rev() {
        let l = e.values[k];
        if l <= cutoff {
            continue;
        }
        let s = l.sqrt();
        let vec = e.vector(k);
        out.push(CMat::from_fn(dout, din, |p, i| vec[i * dout + p] * s));
    }
    Ok(out)
}

/// `Σ ‖a_i‖_op·‖b_i‖₁`, an upper bound on the projective norm of `Σ a_i⊗b_i`.
pub fn projective_norm_ub(decomposition: &[(CMat, CMat)]) -> Result<f64> {
    let mut s = 0.0;
    for (a, b) in decomposition {
        s += operator_norm(a)? * norms(b)?.trace;
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub n: usize,
    pub trials: usize,
    /// Smallest value of `Σ_ij y_i* m(x_i* x_j) y_j` over unit `(y_i)`.
    pub min_value: f64,
    pub violation_found: bool,
}

/// Samples families `x_1..x_n` and minimizes the form `Σ y_i* m(x_i* x_j) y_j`
/// over `y` exactly (minimum eigenvalue of the block matrix `[m(x_i* x_j)]`).
/// The first trial with `n ≥ d_in` uses `x_i = E_{0i}`, whose block matrix is
/// the Choi matrix itself.
pub fn cp_criterion_check(
    m: &LinearMap,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<CriterionReport> {
    let (din, dout) = (m.d_in(), m.d_out());
    let mut r = rng::seeded(seed);
    let mut min_value = f64::INFINITY;
    for t in 0..trials.max(1) {
        let xs: Vec<CMat> = if t == 0 && n >= din {
            (0..n)
                .map(|i| {
                    if i < din {
                        CMat::unit(din, 0, i)
                    } else {
                        CMat::zeros(din, din)
                    }
                })
                .collect()
        } else {
            (0..n).map(|_| rng::ginibre(&mut r, din, din)).collect()
        };
        let mut block = CMat::zeros(n * dout, n * dout);
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let img = m.apply(&xs[i].adjoint().matmul(&xs[j]))?;
                for p in 0..dout {
                    for q in 0..dout {
                        block[(i * dout + p, j * dout + q)] = img[(p, q)];
                    }
                }
            }
            scale = scale.max(xs[i].frobenius_norm().powi(2));
        }
        let v = eig_hermitian(&block.hermitian_part())?.min_value() / scale.max(1e-300);
        min_value = min_value.min(v);
    }
    Ok(CriterionReport {
        n,
        trials,
        min_value,
        violation_found: min_value < -1e-9,
    })
}

/// Assembles `Σ a_i ⊗ b_i`.
pub fn assemble(element: &[(CMat, CMat)]) -> Option<CMat> {
    let mut it = element.iter();
    let (a, b) = it.next()?;
    let mut acc = tensor_product(a, b);
    for (a, b) in it {
        acc += &tensor_product(a, b);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_pairings_on_units() {
        let id = LinearMap::identity(2);
        let e11 = CMat::unit(2, 0, 0);
        let e12 = CMat::unit(2, 0, 1);
        let one = pair_map_functional(
            &id,
            &[(e11.clone(), e11.clone())],
            PairingConvention::Projective,
        )
        .unwrap();
        assert_eq!(one, c(1.0));
        let zero = pair_map_functional(&id, &[(e11, e12)], PairingConvention::Projective).unwrap();
        assert_eq!(zero, c(0.0));
    }

    #[test]
    fn tensor_pairing_matches_term_pairing() {
        let mut r = rng::seeded(3);
        let m = LinearMap::from_kraus(&[rng::ginibre(&mut r, 3, 2), rng::ginibre(&mut r, 3, 2)])
            .unwrap();
        let el: Vec<(CMat, CMat)> = (0..3)
            .map(|_| (rng::ginibre(&mut r, 2, 2), rng::ginibre(&mut r, 3, 3)))
            .collect();
        let w = assemble(&el).unwrap();
        for conv in [PairingConvention::Projective, PairingConvention::Injective] {
            let a = pair_map_functional(&m, &el, conv).unwrap();
            let b = pair_with_tensor(&m, &w, conv).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn kraus_of_identity_and_pinching() {
        let k = kraus_factors(&LinearMap::identity(3)).unwrap();
        assert_eq!(k.len(), 1);
        assert!(k[0].max_abs_diff(&CMat::identity(3)) < 1e-12);
        let k = kraus_factors(&LinearMap::pinching(3)).unwrap();
        assert_eq!(k.len(), 3);
        let mut found = [false; 3];
        for v in &k {
            for (i, f) in found.iter_mut().enumerate() {
                if v.max_abs_diff(&CMat::unit(3, i, i)) < 1e-12 {
                    *f = true;
                }
            }
        }
        assert!(found.iter().all(|&f| f));
        assert!(matches!(
            kraus_factors(&LinearMap::transposition(2)),
            Err(Error::NotCp { .. })
        ));
    }

    #[test]
    fn projective_ub_examples() {
        let one = projective_norm_ub(&[(CMat::identity(2), CMat::unit(2, 0, 0))]).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let el = vec![
            (CMat::unit(2, 0, 0), CMat::unit(2, 0, 0)),
            (CMat::unit(2, 1, 1), CMat::unit(2, 1, 1)),
        ];
        assert!((projective_norm_ub(&el).unwrap() - 2.0).abs() < 1e-14);
        assert!((operator_norm(&assemble(&el).unwrap()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn criterion_identity_and_transposition() {
        let rep = cp_criterion_check(&LinearMap::identity(2), 3, 20, 1).unwrap();
        assert!(rep.min_value >= -1e-12 && !rep.violation_found);
        let rep = cp_criterion_check(&LinearMap::transposition(2), 2, 20, 1).unwrap();
        assert!(rep.violation_found);
    }
}
