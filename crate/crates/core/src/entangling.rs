//! The entangling operator `H : H_A → H_A⊗H_B⊗H_B` of a bipartite state and
//! the two entanglement maps it induces.

use serde::Serialize;

use crate::mapspace::LinearMap;
use crate::matcore::{
    eig_hermitian, svd_thin, tensor_product, vector, ComplexMatrix, FactorSplit, HermitianEigen,
    Subsystem,
};
use crate::rng;
use crate::states::BipartiteState;
use crate::{CMat, Error, Result, C64};

/// Choice of orthonormal basis defining a conjugation `J`.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisChoice {
    Computational,
    /// Eigenbasis of the relevant density (`ρ` for the joint system, `ρ_A` for
    /// the first factor).
    Eigen,
    /// Columns of a unitary.
    Custom(CMat),
}

#[derive(Clone, Debug)]
pub struct EntanglingOperator {
    split: FactorSplit,
    matrix: CMat,
    source_eigs: HermitianEigen<f64>,
    basis_a: CMat,
    basis_ab: CMat,
}

fn check_unitary(u: &CMat, n: usize, what: &str) -> Result<()> {
    if u.rows() != n || u.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} basis must be {n}x{n}"
        )));
    }
    if u.adjoint().matmul(u).max_abs_diff(&CMat::identity(n)) > 1e-10 {
        return Err(Error::BadParameter(format!("{what} basis is not unitary")));
    }
    Ok(())
}

/// `J x = W·conj(W*x)`: the conjugation fixing the columns of `W`.
fn conjugate_in(w: &CMat, x: &[C64]) -> Vec<C64> {
    let coords: Vec<C64> = w
        .adjoint()
        .matvec(x)
        .into_iter()
        .map(|z| z.conj())
        .collect();
    w.matvec(&coords)
}

/// Coefficients of `x` as a `dA × dB` matrix, `X[a,k] = x[a·dB + k]`.
pub fn reshape(x: &[C64], split: FactorSplit) -> CMat {
    CMat::from_fn(split.d_a, split.d_b, |a, k| x[a * split.d_b + k])
}

impl EntanglingOperator {
    /// Assembles `Hζ = Σ_i λ_i^{1/2} (J_{AB} e_i) ⊗ T*_{J_A ζ} e_i` column by
    /// column, with `T*_η (h⊗k) = ⟨η,h⟩ k`.
    pub fn build(
        s: &BipartiteState,
        basis_a: &BasisChoice,
        basis_ab: &BasisChoice,
    ) -> Result<Self> {
        let split = s.split();
        let (da, db) = (split.d_a, split.d_b);
        let mut eigs = eig_hermitian(s.rho())?;
        eigs.canonicalize_degenerate(1e-10);
        let ba = match basis_a {
            BasisChoice::Computational => CMat::identity(da),
            BasisChoice::Eigen => {
                let mut e = eig_hermitian(&s.reduced(Subsystem::A))?;
                e.canonicalize_degenerate(1e-10);
                e.vectors
            }
            BasisChoice::Custom(u) => {
                check_unitary(u, da, "first-factor")?;
                u.clone()
            }
        };
        let bab = match basis_ab {
            BasisChoice::Computational => CMat::identity(da * db),
            BasisChoice::Eigen => eigs.vectors.clone(),
            BasisChoice::Custom(u) => {
                check_unitary(u, da * db, "joint")?;
                u.clone()
            }
        };
        let rows = da * db * db;
        let mut matrix = CMat::zeros(rows, da);
        for q in 0..da {
            let zeta = vector::basis::<f64>(da, q);
            let j_zeta = conjugate_in(&ba, &zeta);
            let mut col = vec![C64::new(0.0, 0.0); rows];
            for i in 0..eigs.dim() {
                let lam = eigs.values[i].max(0.0);
                if lam == 0.0 {
                    continue;
                }
                let e_i = eigs.vector(i);
                let first = conjugate_in(&bab, &e_i);
                // T*_{Jζ} e_i = Σ_{a,k} e_i[a,k]·conj((Jζ)_a)·f_k
                let mut second = vec![C64::new(0.0, 0.0); db];
                for a in 0..da {
                    let w = j_zeta[a].conj();
                    for (k, s) in second.iter_mut().enumerate() {
                        *s += e_i[a * db + k] * w;
                    }
                }
                let term = vector::kron(&first, &second);
                let sl = lam.sqrt();
                for (c, t) in col.iter_mut().zip(term) {
                    *c += t * sl;
                }
            }
            matrix.set_column(q, &col);
        }
        Ok(Self {
            split,
            matrix,
            source_eigs: eigs,
            basis_a: ba,
            basis_ab: bab,
        })
    }

    /// Default bases: computational for the first factor, eigenbasis of `ρ`
    /// for the joint space.
    pub fn new(s: &BipartiteState) -> Result<Self> {
        Self::build(s, &BasisChoice::Computational, &BasisChoice::Eigen)
    }

    pub fn split(&self) -> FactorSplit {
        self.split
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn source_eigs(&self) -> &HermitianEigen<f64> {
        &self.source_eigs
    }

    pub fn basis_a(&self) -> &CMat {
        &self.basis_a
    }

    pub fn basis_ab(&self) -> &CMat {
        &self.basis_ab
    }

    /// `C = V·Vᵀ`, so that `J_A ζ = C·ζ̄`.
    fn c_matrix(&self) -> CMat {
        self.basis_a.matmul(&self.basis_a.transpose())
    }

    /// Transpose with respect to the first-factor basis: `aᵗ = J_A a* J_A = C·aᵀ·C̄`.
    pub fn transpose_a(&self, a: &CMat) -> CMat {
        let c = self.c_matrix();
        c.matmul(&a.transpose()).matmul(&c.conj())
    }

    /// `H*(1⊗b)H` on `H_A`.
    pub fn compress(&self, b: &CMat) -> CMat {
        let one = CMat::identity(self.split.dim());
        let h = &self.matrix;
        h.adjoint().matmul(&tensor_product(&one, b)).matmul(h)
    }

    /// `H*(u⊗f)` for `u ∈ H_A⊗H_B`, `f ∈ H_B`.
    pub fn adjoint_apply(&self, u: &[C64], f: &[C64]) -> Vec<C64> {
        self.matrix.adjoint().matvec(&vector::kron(u, f))
    }

    /// `φ*(a) = Tr_{H_A⊗H_B}(H aᵗ H*)` as a map `M_dA → M_dB`.
    pub fn phi_star(&self) -> LinearMap {
        let (da, db) = (self.split.d_a, self.split.d_b);
        let n = da * db;
        let h = &self.matrix;
        LinearMap::from_fn(da, db, |a| {
            let big = h.matmul(&self.transpose_a(a)).matmul(&h.adjoint());
            CMat::from_fn(db, db, |k, l| {
                (0..n).map(|r| big[(r * db + k, r * db + l)]).sum()
            })
        })
    }

    /// `φ(b) = (H*(1⊗b)H)ᵗ` as a map `M_dB → M_dA`.
    pub fn phi(&self) -> LinearMap {
        let (da, db) = (self.split.d_a, self.split.d_b);
        LinearMap::from_fn(db, da, |b| self.transpose_a(&self.compress(b)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MapDirection {
    /// `φ : B(H_B) → B(H_A)`.
    Phi,
    /// `φ* : B(H_A) → B(H_B)`.
    PhiStar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementMap {
    pub direction: MapDirection,
    pub map: LinearMap,
}

impl EntanglementMap {
    pub fn choi(&self) -> &CMat {
        self.map.choi()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.map.d_in(), self.map.d_out())
    }
}

pub fn entanglement_maps_from(h: &EntanglingOperator) -> (EntanglementMap, EntanglementMap) {
    (
        EntanglementMap {
            direction: MapDirection::Phi,
            map: h.phi(),
        },
        EntanglementMap {
            direction: MapDirection::PhiStar,
            map: h.phi_star(),
        },
    )
}

/// `φ*(a) = Tr_A((a⊗1)ρ)` evaluated directly from the density.
pub fn phi_star_closed_form(s: &BipartiteState) -> LinearMap {
    let split = s.split();
    let rho = s.rho();
    let db = split.d_b;
    LinearMap::from_fn(split.d_a, db, |a| {
        let prod = tensor_product(a, &CMat::identity(db)).matmul(rho);
        crate::matcore::partial_trace(&prod, split, Subsystem::A).expect("side matches split")
    })
}

/// Worst-case residuals of the representation identities over random probes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub samples: usize,
    /// `max |Tr(ρ(a⊗b)) − Tr(aᵗ H*(1⊗b)H)|`.
    pub theorem_residual: f64,
    /// `max |Tr(ρ(a⊗b)) − Tr(b·φ*(a))|` and the same for `Tr(a·φ(b))`.
    pub phi_star_residual: f64,
    pub phi_residual: f64,
    /// Frobenius distance between the Choi matrices of `φ*` from `H` and from the closed form.
    pub closed_form_distance: f64,
    pub scale: f64,
    pub passed: bool,
}

pub const REPRESENTATION_TOL: f64 = 1e-9;

pub fn verify_representation(
    s: &BipartiteState,
    samples: usize,
    seed: u64,
) -> Result<RepresentationReport> {
    let h = EntanglingOperator::new(s)?;
    let (phi, phi_star) = entanglement_maps_from(&h);
    let closed = phi_star_closed_form(s);
    let split = s.split();
    let mut r = rng::seeded(seed);
    let (mut t_res, mut ps_res, mut p_res) = (0.0f64, 0.0f64, 0.0f64);
    let mut scale = 1.0f64;
    let mut probe = |a: &CMat, b: &CMat| -> Result<()> {
        let lhs = s.expectation(a, b);
        let rhs = h.transpose_a(a).matmul(&h.compress(b)).trace();
        let via_ps = phi_star.map.apply(a)?.matmul(b).trace();
        let via_p = a.matmul(&phi.map.apply(b)?).trace();
        t_res = t_res.max((lhs - rhs).norm());
        ps_res = ps_res.max((lhs - via_ps).norm());
        p_res = p_res.max((lhs - via_p).norm());
        scale = scale.max(a.frobenius_norm() * b.frobenius_norm());
        Ok(())
    };
    probe(&CMat::identity(split.d_a), &CMat::identity(split.d_b))?;
    for _ in 0..samples {
        let a = rng::ginibre(&mut r, split.d_a, split.d_a);
        let b = rng::ginibre(&mut r, split.d_b, split.d_b);
        probe(&a, &b)?;
    }
    let closed_form_distance = phi_star.map.choi().distance(closed.choi());
    let tol = REPRESENTATION_TOL * scale;
    Ok(RepresentationReport {
        samples,
        theorem_residual: t_res,
        phi_star_residual: ps_res,
        phi_residual: p_res,
        closed_form_distance,
        scale,
        passed: t_res <= tol
            && ps_res <= tol
            && p_res <= tol
            && closed_form_distance <= REPRESENTATION_TOL,
    })
}

/// `x₁ = (e₁⊗f₂ − e₂⊗f₃ − e₃⊗f₁)/√3` and `x₂ = (e₁⊗f₁ + e₂⊗f₂ + e₃⊗f₃)/√3`.
pub fn qutrit_pair_vectors() -> (Vec<C64>, Vec<C64>) {
    let s = 1.0 / 3f64.sqrt();
    let mut x1 = vec![C64::new(0.0, 0.0); 9];
    x1[1] = C64::new(s, 0.0);
    x1[5] = C64::new(-s, 0.0);
    x1[6] = C64::new(-s, 0.0);
    (x1, crate::states::max_entangled_vector(3))
}

/// `φ*` for the two maximally entangled vectors on `C³⊗C³`.
pub fn qutrit_pair_maps() -> Result<(EntanglementMap, EntanglementMap)> {
    let split = FactorSplit::new(3, 3)?;
    let (x1, x2) = qutrit_pair_vectors();
    let m1 = EntanglingOperator::new(&BipartiteState::pure(split, &x1)?)?.phi_star();
    let m2 = EntanglingOperator::new(&BipartiteState::pure(split, &x2)?)?.phi_star();
    Ok((
        EntanglementMap {
            direction: MapDirection::PhiStar,
            map: m1,
        },
        EntanglementMap {
            direction: MapDirection::PhiStar,
            map: m2,
        },
    ))
}

/// Closed-form image of `a` under `φ*` for `x₁`:
/// `(1/3)[[a₃₃, −a₁₃, a₂₃], [−a₃₁, a₁₁, −a₂₁], [a₃₂, −a₁₂, a₂₂]]`.
pub fn qutrit_x1_image(a: &CMat) -> CMat {
    let g = |i: usize, j: usize| a[(i - 1, j - 1)];
    CMat::new(
        3,
        3,
        vec![
            g(3, 3),
            -g(1, 3),
            g(2, 3),
            -g(3, 1),
            g(1, 1),
            -g(2, 1),
            g(3, 2),
            -g(1, 2),
            g(2, 2),
        ],
    )
    .expect("3x3")
    .scale_re(1.0 / 3.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpWitness {
    pub k: usize,
    pub l: usize,
    /// Schmidt coefficients of the input, descending.
    pub schmidt: Vec<f64>,
    pub psi: Vec<C64>,
    /// `⟨Ψ|Σ E_ij⊗φ*(|v_i⟩⟨v_j|)|Ψ⟩`, evaluated directly.
    pub value: f64,
    /// `−2|Re λ_k λ̄_l|`.
    pub predicted: f64,
}

/// Exhibits the failure of complete positivity of `φ*` for an entangled pure
/// vector `x = Σ λ_k v_k⊗z_k` via `Ψ = e_k⊗z_l ± e_l⊗z_k`.
pub fn cp_violation_witness_pure(split: FactorSplit, x: &[C64]) -> Result<CpWitness> {
    if x.len() != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for split {split}",
            x.len()
        )));
    }
    let mut xn = x.to_vec();
    if vector::normalize(&mut xn) == 0.0 {
        return Err(Error::NotAState("zero vector".into()));
    }
    let triples = svd_thin(&reshape(&xn, split))?;
    let schmidt: Vec<f64> = triples.iter().map(|t| t.sigma).collect();
    if triples.len() < 2 || triples[1].sigma <= 1e-10 {
        return Err(Error::NotEntangled);
    }
    let (da, db) = (split.d_a, split.d_b);
    let state = BipartiteState::pure(split, &xn)?;
    let phi_star = phi_star_closed_form(&state);
    // x = Σ σ_k u_k ⊗ z_k with z_k = conj(right singular vector)
    let lefts: Vec<Vec<C64>> = triples.iter().map(|t| t.left.clone()).collect();
    let v = ComplexMatrix::from_columns(&vector::complete_basis(&lefts, da));
    let z: Vec<Vec<C64>> = triples
        .iter()
        .map(|t| t.right.iter().map(|c| c.conj()).collect())
        .collect();
    let mut w = CMat::zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..da {
            let img = phi_star.apply(&CMat::outer(&v.column(i), &v.column(j)))?;
            w += &tensor_product(&CMat::unit(da, i, j), &img);
        }
    }
    let (k, l) = (0, 1);
    let lam_k = C64::new(schmidt[k], 0.0);
    let lam_l = C64::new(schmidt[l], 0.0);
    let re = (lam_k * lam_l.conj()).re;
    let sign = if re >= 0.0 { -1.0 } else { 1.0 };
    let a = vector::kron(&vector::basis::<f64>(da, k), &z[l]);
    let b = vector::kron(&vector::basis::<f64>(da, l), &z[k]);
    let psi: Vec<C64> = a.iter().zip(&b).map(|(p, q)| p + q * sign).collect();
    let value = w.sandwich(&psi, &psi).re;
    Ok(CpWitness {
        k,
        l,
        schmidt,
        psi,
        value,
        predicted: -2.0 * re.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapspace::classify_cp;
    use crate::states::random_state;
    use rand::Rng;

    fn s(a: usize, b: usize) -> FactorSplit {
        FactorSplit::new(a, b).unwrap()
    }

    #[test]
    fn pure_product_closed_form() {
        let mut r = rng::seeded(1);
        let x = rng::random_unit_vector(&mut r, 2);
        let y = rng::random_unit_vector(&mut r, 3);
        let st = BipartiteState::pure(s(2, 3), &vector::kron(&x, &y)).unwrap();
        let h = EntanglingOperator::new(&st).unwrap();
        // Hζ = J_AB(x⊗y) ⊗ (J_A ζ, x) y
        let zeta = rng::random_vector(&mut r, 2);
        let hz = h.matrix().matvec(&zeta);
        let jxy = conjugate_in(h.basis_ab(), &vector::kron(&x, &y));
        let jz = conjugate_in(h.basis_a(), &zeta);
        let coef = vector::dot(&jz, &x);
        let want: Vec<C64> = vector::kron(&jxy, &y)
            .into_iter()
            .map(|t| t * coef)
            .collect();
        let diff: f64 = hz
            .iter()
            .zip(&want)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        // φ*(a) = (x, a x) P_y
        let a = rng::ginibre(&mut r, 2, 2);
        let got = h.phi_star().apply(&a).unwrap();
        let want = CMat::outer(&y, &y).scale(vector::dot(&x, &a.matvec(&x)));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn probe_identity() {
        let st = random_state(s(2, 3), 6, 3).unwrap();
        let h = EntanglingOperator::new(&st).unwrap();
        let c = h.basis_a().matmul(&h.basis_a().transpose());
        let mut r = rng::seeded(4);
        for _ in 0..50 {
            let i = r.random_range(0..6);
            let f = rng::random_vector(&mut r, 3);
            let e_i = h.source_eigs().vector(i);
            let lam = h.source_eigs().values[i].max(0.0);
            // √λ_i·C·Ē_i·f, by explicit summation
            let mut want = vec![C64::new(0.0, 0.0); 2];
            for (a, w) in want.iter_mut().enumerate() {
                for b in 0..2 {
                    for k in 0..3 {
                        *w += c[(a, b)] * e_i[b * 3 + k].conj() * f[k] * lam.sqrt();
                    }
                }
            }
            let got = h.adjoint_apply(&e_i, &f);
            let diff: f64 = got
                .iter()
                .zip(&want)
                .map(|(p, q)| (p - q).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn maximally_mixed_trace() {
        let st = BipartiteState::new(s(2, 2), CMat::identity(4).scale_re(0.25)).unwrap();
        let h = EntanglingOperator::new(&st).unwrap();
        let t = h.matrix().adjoint().matmul(h.matrix()).trace();
        assert!((t.re - 1.0).abs() < 1e-12 && t.im.abs() < 1e-12);
    }

    #[test]
    fn self_consistent_basis_gives_reduced_state() {
        let st = random_state(s(3, 2), 4, 8).unwrap();
        let h = EntanglingOperator::build(&st, &BasisChoice::Eigen, &BasisChoice::Eigen).unwrap();
        let hh = h.matrix().adjoint().matmul(h.matrix());
        assert!(hh.max_abs_diff(&st.reduced(Subsystem::A)) < 1e-12);
    }

    #[test]
    fn representation_on_random_states() {
        for (i, (a, b)) in [(2, 2), (2, 3), (3, 2), (3, 3)].into_iter().enumerate() {
            let st = random_state(s(a, b), a * b, 100 + i as u64).unwrap();
            let rep = verify_representation(&st, 30, 7).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn representation_holds_for_any_joint_basis() {
        let st = random_state(s(2, 2), 3, 5).unwrap();
        let u = rng::haar_unitary(&mut rng::seeded(6), 4);
        let v = rng::haar_unitary(&mut rng::seeded(7), 2);
        let h = EntanglingOperator::build(&st, &BasisChoice::Custom(v), &BasisChoice::Custom(u))
            .unwrap();
        let mut r = rng::seeded(8);
        let a = rng::ginibre(&mut r, 2, 2);
        let b = rng::ginibre(&mut r, 2, 2);
        let lhs = st.expectation(&a, &b);
        let rhs = h.transpose_a(&a).matmul(&h.compress(&b)).trace();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(
            h.phi_star()
                .choi()
                .distance(phi_star_closed_form(&st).choi())
                < 1e-12
        );
    }

    #[test]
    fn qutrit_pair_patterns() {
        let (m1, m2) = qutrit_pair_maps().unwrap();
        let mut r = rng::seeded(9);
        let a = rng::ginibre(&mut r, 3, 3);
        let t = m2.map.apply(&a).unwrap();
        assert!(t.max_abs_diff(&a.transpose().scale_re(1.0 / 3.0)) < 1e-12);
        let g = |i: usize, j: usize| a[(i - 1, j - 1)];
        let want = CMat::new(
            3,
            3,
            vec![
                g(3, 3),
                -g(1, 3),
                g(2, 3),
                -g(3, 1),
                g(1, 1),
                -g(2, 1),
                g(3, 2),
                -g(1, 2),
                g(2, 2),
            ],
        )
        .unwrap()
        .scale_re(1.0 / 3.0);
        assert!(m1.map.apply(&a).unwrap().max_abs_diff(&want) < 1e-12);
        assert!(qutrit_x1_image(&a).max_abs_diff(&want) < 1e-15);
        let v = classify_cp(&m2.map).unwrap();
        assert!(v.co_cp && !v.cp);
        let e13 = m1.map.apply(&CMat::unit(3, 0, 2)).unwrap();
        assert!((e13[(0, 1)] + C64::new(1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn witness_values() {
        let h = 0.5f64.sqrt();
        let x = crate::states::schmidt_vector(&mut rng::seeded(2), s(2, 2), &[h, h]).unwrap();
        let w = cp_violation_witness_pure(s(2, 2), &x).unwrap();
        assert!((w.value + 1.0).abs() < 1e-10);
        let x = crate::states::schmidt_vector(
            &mut rng::seeded(3),
            s(2, 3),
            &[0.9f64.sqrt(), 0.1f64.sqrt()],
        )
        .unwrap();
        let w = cp_violation_witness_pure(s(2, 3), &x).unwrap();
        assert!((w.value + 0.6).abs() < 1e-10, "{}", w.value);
        let prod = vector::kron(&vector::basis::<f64>(2, 0), &vector::basis::<f64>(2, 1));
        assert!(matches!(
            cp_violation_witness_pure(s(2, 2), &prod),
            Err(Error::NotEntangled)
        ));
    }
}
