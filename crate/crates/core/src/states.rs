//! Bipartite density matrices, standard families and the partial-transpose test.

use rand::Rng;

use crate::matcore::{
    eig_hermitian, partial_trace, partial_transpose, psd_tol, tensor_product, vector,
    ComplexMatrix, FactorSplit, Subsystem,
};
use crate::rng;
use crate::{CMat, Error, Result, C64};

const TRACE_TOL: f64 = 1e-10;

/// Density matrix on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    split: FactorSplit,
    rho: CMat,
}

impl BipartiteState {
    /// Validates Hermiticity, positivity and unit trace. Hermitian inputs
    /// within tolerance are symmetrized.
    pub fn new(split: FactorSplit, rho: CMat) -> Result<Self> {
        if !rho.is_square() || rho.rows() != split.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of split {split} needs side {}, got {}x{}",
                split.dim(),
                rho.rows(),
                rho.cols()
            )));
        }
        if !rho.is_hermitian(1e-12) {
            return Err(Error::NotAState(format!("asymmetry {:e}", rho.asymmetry())));
        }
        let rho = rho.hermitian_part();
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotAState(format!("trace {tr} differs from 1")));
        }
        let e = eig_hermitian(&rho)?;
        if e.min_value() < -psd_tol(e.max_value().abs()) {
            return Err(Error::NotAState(format!(
                "min eigenvalue {:e}",
                e.min_value()
            )));
        }
        Ok(Self { split, rho })
    }

    /// Normalizes a nonzero PSD matrix to unit trace first.
    pub fn from_unnormalized(split: FactorSplit, m: CMat) -> Result<Self> {
        let t = m.trace().re;
        if t.abs() < 1e-300 {
            return Err(Error::NotAState("zero trace".into()));
        }
        Self::new(split, m.scale_re(1.0 / t))
    }

    /// `|ψ⟩⟨ψ|/‖ψ‖²`.
    pub fn pure(split: FactorSplit, psi: &[C64]) -> Result<Self> {
        if psi.len() != split.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for split {split}",
                psi.len()
            )));
        }
        let mut v = psi.to_vec();
        if vector::normalize(&mut v) == 0.0 {
            return Err(Error::NotAState("zero vector".into()));
        }
        Self::new(split, ComplexMatrix::outer(&v, &v))
    }

    /// `σ_A ⊗ σ_B` for single-system densities.
    pub fn product(a: &CMat, b: &CMat) -> Result<Self> {
        let split = FactorSplit::new(a.rows(), b.rows())?;
        Self::new(split, tensor_product(a, b))
    }

    pub fn split(&self) -> FactorSplit {
        self.split
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn into_rho(self) -> CMat {
        self.rho
    }

    pub fn reduced(&self, keep: Subsystem) -> CMat {
        let traced = match keep {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        };
        partial_trace(&self.rho, self.split, traced).expect("state side matches split")
    }

    /// `Tr(ρ(a⊗b))`.
    pub fn expectation(&self, a: &CMat, b: &CMat) -> C64 {
        // ρ is Hermitian, so Tr(ρ* X) = Tr(ρX)
        self.rho.hs_inner(&tensor_product(a, b))
    }

    /// `(U⊗V) ρ (U⊗V)*`.
    pub fn local_rotate(&self, u: &CMat, v: &CMat) -> Self {
        let w = tensor_product(u, v);
        Self {
            split: self.split,
            rho: w.matmul(&self.rho).matmul(&w.adjoint()).hermitian_part(),
        }
    }
}

/// Outcome of the partial-transpose test.
#[derive(Clone, Debug, PartialEq)]
pub struct PptVerdict {
    pub is_ppt: bool,
    /// Minimum eigenvalue of `ρ^{t_B}`.
    pub min_eig: f64,
    /// Unit eigenvector at `min_eig`.
    pub witness: Vec<C64>,
}

fn verdict_of(m: &CMat) -> PptVerdict {
    let e = eig_hermitian(m).expect("partial transpose of a Hermitian matrix is Hermitian");
    let op = e.min_value().abs().max(e.max_value().abs());
    PptVerdict {
        is_ppt: e.min_value() >= -psd_tol(op),
        min_eig: e.min_value(),
        witness: e.vector(0),
    }
}

pub fn is_ppt(s: &BipartiteState) -> PptVerdict {
    verdict_of(
        &partial_transpose(s.rho(), s.split(), Subsystem::B).expect("state side matches split"),
    )
}

/// Same test with the transpose on the first factor.
pub fn is_ppt_via_a(s: &BipartiteState) -> PptVerdict {
    verdict_of(
        &partial_transpose(s.rho(), s.split(), Subsystem::A).expect("state side matches split"),
    )
}

/// `Σ_i |ii⟩/√d`.
pub fn max_entangled_vector(d: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = C64::new(s, 0.0);
    }
    v
}

/// `|Φ+⟩⟨Φ+|` on `C^d ⊗ C^d`.
pub fn max_entangled_projector(d: usize) -> CMat {
    let v = max_entangled_vector(d);
    ComplexMatrix::outer(&v, &v)
}

/// `p·|Φ+⟩⟨Φ+| + (1−p)·I/d²`.
pub fn isotropic(d: usize, p: f64) -> Result<BipartiteState> {
    if d < 2 {
        return Err(Error::BadParameter(format!(
            "isotropic state needs d ≥ 2, got {d}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!(
            "mixing weight p = {p} outside [0,1]"
        )));
    }
    let n = d * d;
    let rho =
        &max_entangled_projector(d).scale_re(p) + &CMat::identity(n).scale_re((1.0 - p) / n as f64);
    BipartiteState::new(FactorSplit::new(d, d)?, rho)
}

/// Schmidt profile of a random pure state.
#[derive(Clone, Debug, PartialEq)]
pub enum Schmidt {
    /// Prescribed nonnegative coefficients with unit squared sum.
    Coefficients(Vec<f64>),
    /// Haar-random vector.
    Haar,
}

/// `Σ_k σ_k (U e_k)⊗(V f_k)` with Haar-random local unitaries.
pub fn random_pure_bipartite(
    split: FactorSplit,
    schmidt: &Schmidt,
    seed: u64,
) -> Result<BipartiteState> {
    let mut r = rng::seeded(seed);
    match schmidt {
        Schmidt::Haar => {
            let v = rng::random_unit_vector(&mut r, split.dim());
            BipartiteState::pure(split, &v)
        }
        Schmidt::Coefficients(c) => {
            let psi = schmidt_vector(&mut r, split, c)?;
            BipartiteState::pure(split, &psi)
        }
    }
}

/// Random pure vector with the given Schmidt coefficients.
pub fn schmidt_vector<R: Rng + ?Sized>(
    r: &mut R,
    split: FactorSplit,
    coeffs: &[f64],
) -> Result<Vec<C64>> {
    if coeffs.is_empty() || coeffs.len() > split.d_a.min(split.d_b) {
        return Err(Error::BadParameter(format!(
            "{} Schmidt coefficients for split {split}",
            coeffs.len()
        )));
    }
    if coeffs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::BadParameter(
            "Schmidt coefficients must be finite and nonnegative".into(),
        ));
    }
    let sq: f64 = coeffs.iter().map(|c| c * c).sum();
    if (sq - 1.0).abs() > 1e-10 {
        return Err(Error::BadParameter(format!(
            "Schmidt coefficients have squared sum {sq}"
        )));
    }
    let u = rng::haar_unitary(r, split.d_a);
    let v = rng::haar_unitary(r, split.d_b);
    let mut psi = vec![C64::new(0.0, 0.0); split.dim()];
    for (k, &c) in coeffs.iter().enumerate() {
        let term = vector::kron(&u.column(k), &v.column(k));
        for (p, t) in psi.iter_mut().zip(term) {
            *p += t * c;
        }
    }
    Ok(psi)
}

/// Wishart-style density of the given rank.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<CMat> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::BadParameter(format!(
            "rank {rank} for dimension {dim}"
        )));
    }
    Ok(rng::random_density_matrix(
        &mut rng::seeded(seed),
        dim,
        rank,
    ))
}

pub fn random_state(split: FactorSplit, rank: usize, seed: u64) -> Result<BipartiteState> {
    BipartiteState::new(split, random_density(split.dim(), rank, seed)?)
}

/// One term `w·|x⟩⟨x|⊗|y⟩⟨y|` of a separable decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub x: Vec<C64>,
    pub y: Vec<C64>,
}

impl ProductTerm {
    pub fn matrix(&self) -> CMat {
        tensor_product(
            &ComplexMatrix::outer(&self.x, &self.x),
            &ComplexMatrix::outer(&self.y, &self.y),
        )
        .scale_re(self.weight)
    }
}

#[derive(Clone, Debug)]
pub struct SeparableSample {
    pub state: BipartiteState,
    pub terms: Vec<ProductTerm>,
}

/// Convex mixture of random pure product states, returned with its decomposition.
pub fn random_separable(split: FactorSplit, terms: usize, seed: u64) -> Result<SeparableSample> {
    if terms == 0 {
        return Err(Error::BadParameter(
            "separable mixture needs at least one term".into(),
        ));
    }
    let mut r = rng::seeded(seed);
    let raw: Vec<f64> = (0..terms).map(|_| r.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let terms: Vec<ProductTerm> = raw
        .iter()
        .map(|w| ProductTerm {
            weight: w / total,
            x: rng::random_unit_vector(&mut r, split.d_a),
            y: rng::random_unit_vector(&mut r, split.d_b),
        })
        .collect();
    let mut rho = CMat::zeros(split.dim(), split.dim());
    for t in &terms {
        rho += &t.matrix();
    }
    Ok(SeparableSample {
        state: BipartiteState::new(split, rho.hermitian_part())?,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: usize, b: usize) -> FactorSplit {
        FactorSplit::new(a, b).unwrap()
    }

    #[test]
    fn product_state_is_ppt() {
        let a = rng::random_density_matrix(&mut rng::seeded(1), 2, 2);
        let b = rng::random_density_matrix(&mut rng::seeded(2), 3, 2);
        assert!(is_ppt(&BipartiteState::product(&a, &b).unwrap()).is_ppt);
    }

    #[test]
    fn isotropic_min_eig_formula() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.9, 1.0] {
            let v = is_ppt(&isotropic(2, p).unwrap());
            assert!((v.min_eig - (1.0 - 3.0 * p) / 4.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn isotropic_d3_threshold() {
        assert!(is_ppt(&isotropic(3, 0.25).unwrap()).is_ppt);
        assert!(!is_ppt(&isotropic(3, 0.25 + 1e-6).unwrap()).is_ppt);
        assert!(is_ppt(&isotropic(3, 0.2).unwrap()).is_ppt);
    }

    #[test]
    fn bell_state_min_eig() {
        let v = is_ppt(&isotropic(2, 1.0).unwrap());
        assert!(!v.is_ppt);
        assert!((v.min_eig + 0.5).abs() < 1e-12);
        let rt =
            partial_transpose(isotropic(2, 1.0).unwrap().rho(), s(2, 2), Subsystem::B).unwrap();
        assert!((rt.sandwich(&v.witness, &v.witness).re - v.min_eig).abs() < 1e-9);
    }

    #[test]
    fn isotropic_rejects_bad_parameters() {
        assert!(isotropic(1, 0.5).is_err());
        assert!(isotropic(2, 1.5).is_err());
    }

    #[test]
    fn schmidt_reduced_spectra() {
        let st = random_pure_bipartite(s(2, 2), &Schmidt::Coefficients(vec![0.5f64.sqrt(); 2]), 4)
            .unwrap();
        assert!(
            st.reduced(Subsystem::A)
                .max_abs_diff(&CMat::identity(2).scale_re(0.5))
                < 1e-12
        );
        let st = random_pure_bipartite(s(2, 3), &Schmidt::Coefficients(vec![1.0, 0.0]), 5).unwrap();
        assert!(is_ppt(&st).is_ppt);
        let ev = eig_hermitian(&st.reduced(Subsystem::B)).unwrap().values;
        assert!((ev[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_pure_is_reproducible() {
        let a = random_pure_bipartite(s(3, 3), &Schmidt::Haar, 99).unwrap();
        let b = random_pure_bipartite(s(3, 3), &Schmidt::Haar, 99).unwrap();
        let ea = eig_hermitian(&a.reduced(Subsystem::A)).unwrap().values;
        let eb = eig_hermitian(&b.reduced(Subsystem::A)).unwrap().values;
        assert_eq!(ea, eb);
    }

    #[test]
    fn bad_schmidt_rejected() {
        assert!(random_pure_bipartite(s(2, 2), &Schmidt::Coefficients(vec![0.5, 0.5]), 1).is_err());
        assert!(
            random_pure_bipartite(s(2, 2), &Schmidt::Coefficients(vec![0.6, 0.6, 0.52]), 1)
                .is_err()
        );
    }

    #[test]
    fn random_density_reproducible_full_rank() {
        let a = random_density(2, 2, 17).unwrap();
        assert_eq!(a, random_density(2, 2, 17).unwrap());
        assert!(eig_hermitian(&a).unwrap().min_value() > 1e-6);
        assert!(random_density(2, 3, 1).is_err());
    }

    #[test]
    fn separable_has_matching_decomposition() {
        let smp = random_separable(s(3, 3), 5, 8).unwrap();
        let mut sum = CMat::zeros(9, 9);
        for t in &smp.terms {
            sum += &t.matrix();
        }
        assert!(sum.max_abs_diff(smp.state.rho()) < 1e-14);
        assert!(is_ppt(&smp.state).is_ppt);
    }

    #[test]
    fn state_validation() {
        assert!(matches!(
            BipartiteState::new(s(2, 2), CMat::identity(4)),
            Err(Error::NotAState(_))
        ));
        assert!(matches!(
            BipartiteState::new(s(2, 2), CMat::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = CMat::from_real_diag(&[1.5, -0.5, 0.0, 0.0]);
        assert!(BipartiteState::new(s(2, 2), bad).is_err());
    }
}
