//! Tomita standard form on Hilbert–Schmidt space at finite dimension:
//! `Ω = ρ^{1/2}`, `Δ(X) = ρXρ⁻¹`, conjugations, the transposition unitary
//! `U`, and the natural cones `P_n`, `P_n^τ` of a product reference state.

use serde::Serialize;

use crate::entangling::EntanglingOperator;
use crate::mapspace::classify_cp;
use crate::matcore::{
    eig_hermitian, frac_power, is_psd, partial_trace, partial_transpose, tensor_product,
    FactorSplit, Subsystem,
};
use crate::rng;
use crate::states::{is_ppt, BipartiteState};
use crate::{CMat, Error, Result, C64};

const FAITHFUL_MIN: f64 = 1e-12;

/// Standard form of a faithful single-system density.
#[derive(Clone, Debug)]
pub struct StandardForm {
    rho: CMat,
    /// Eigenbasis of `ρ`, ascending eigenvalues.
    w: CMat,
    eigvals: Vec<f64>,
    omega: CMat,
}

pub fn standard_form(rho: &CMat) -> Result<StandardForm> {
    let mut e = eig_hermitian(rho)?;
    if e.min_value() <= FAITHFUL_MIN {
        return Err(Error::NotFaithful {
            min_eig: e.min_value(),
        });
    }
    e.canonicalize_degenerate(1e-12);
    let omega = e.reconstruct_with(f64::sqrt).hermitian_part();
    Ok(StandardForm {
        rho: rho.hermitian_part(),
        w: e.vectors.clone(),
        eigvals: e.values.clone(),
        omega,
    })
}

impl StandardForm {
    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    pub fn basis(&self) -> &CMat {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    fn rho_power(&self, p: f64) -> CMat {
        let d = CMat::from_real_diag(&self.eigvals.iter().map(|l| l.powf(p)).collect::<Vec<_>>());
        self.w.matmul(&d).matmul(&self.w.adjoint())
    }

    /// `Δ^p(X) = ρ^p X ρ^{-p}`.
    pub fn delta_power(&self, x: &CMat, p: f64) -> CMat {
        self.rho_power(p).matmul(x).matmul(&self.rho_power(-p))
    }

    pub fn delta(&self, x: &CMat) -> CMat {
        self.delta_power(x, 1.0)
    }

    /// Modular conjugation, `J_m(aΩ) = Ωa*`, which is `X ↦ X*`.
    pub fn j_modular(&self, x: &CMat) -> CMat {
        x.adjoint()
    }

    /// Complex conjugation of vectors of `H` in the eigenbasis of `ρ`.
    pub fn j_basis(&self, v: &[C64]) -> Vec<C64> {
        let coords: Vec<C64> = self
            .w
            .adjoint()
            .matvec(v)
            .into_iter()
            .map(|z| z.conj())
            .collect();
        self.w.matvec(&coords)
    }

    /// Conjugation of Hilbert–Schmidt vectors fixing each `|w_i⟩⟨w_j|`.
    pub fn j(&self, x: &CMat) -> CMat {
        let inner = self.w.adjoint().matmul(x).matmul(&self.w).conj();
        self.w.matmul(&inner).matmul(&self.w.adjoint())
    }

    /// `U = Σ|E_ij)(E_ji|` in the eigenbasis: `X ↦ Xᵗ`.
    pub fn u(&self, x: &CMat) -> CMat {
        let inner = self.w.adjoint().matmul(x).matmul(&self.w).transpose();
        self.w.matmul(&inner).matmul(&self.w.adjoint())
    }

    /// Transpose of an operator on `H` in the eigenbasis of `ρ`; same formula as [`Self::u`].
    pub fn transpose_op(&self, a: &CMat) -> CMat {
        self.u(a)
    }

    /// `τ₀(aΩ) = aᵗΩ`.
    pub fn tau0(&self, x: &CMat) -> Result<CMat> {
        let a = x.matmul(&self.rho_power(-0.5));
        Ok(self.transpose_op(&a).matmul(&self.omega))
    }

    /// `ω(a) = (Ω, aΩ)_HS`.
    pub fn omega_state(&self, a: &CMat) -> C64 {
        self.omega.hs_inner(&a.matmul(&self.omega))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardFormReport {
    pub trials: usize,
    pub delta_quarter_residual: f64,
    pub j_modular_residual: f64,
    pub involution_residual: f64,
    pub isometry_residual: f64,
    pub fixed_point_residual: f64,
    pub state_residual: f64,
}

impl StandardFormReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.delta_quarter_residual,
            self.j_modular_residual,
            self.involution_residual,
            self.isometry_residual,
            self.fixed_point_residual,
            self.state_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks the invariants of the standard form on random probes.
pub fn check_standard_form(sf: &StandardForm, trials: usize, seed: u64) -> StandardFormReport {
    let mut r = rng::seeded(seed);
    let d = sf.dim();
    let mut rep = StandardFormReport {
        trials,
        delta_quarter_residual: 0.0,
        j_modular_residual: 0.0,
        involution_residual: 0.0,
        isometry_residual: 0.0,
        fixed_point_residual: 0.0,
        state_residual: 0.0,
    };
    let o = sf.omega();
    rep.fixed_point_residual = sf.j(o).distance(o).max(sf.u(o).distance(o));
    for _ in 0..trials {
        let x = rng::ginibre(&mut r, d, d);
        let scale = x.frobenius_norm();
        let mut q = x.clone();
        for _ in 0..4 {
            q = sf.delta_power(&q, 0.25);
        }
        let dx = sf.delta(&x);
        rep.delta_quarter_residual = rep
            .delta_quarter_residual
            .max(q.distance(&dx) / dx.frobenius_norm().max(1.0));
        let a = rng::ginibre(&mut r, d, d);
        let lhs = sf.j_modular(&a.matmul(o));
        rep.j_modular_residual = rep
            .j_modular_residual
            .max(lhs.distance(&o.matmul(&a.adjoint())));
        let inv = sf
            .j_modular(&sf.j_modular(&x))
            .distance(&x)
            .max(sf.u(&sf.u(&x)).distance(&x));
        rep.involution_residual = rep.involution_residual.max(inv / scale);
        rep.isometry_residual = rep
            .isometry_residual
            .max((sf.u(&x).frobenius_norm() - scale).abs());
        let w = sf.omega_state(&a);
        let t = sf.rho().matmul(&a).trace();
        rep.state_residual = rep.state_residual.max((w - t).norm());
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranspositionReport {
    pub trials: usize,
    /// `max ‖aᵗξ − J a* J ξ‖`.
    pub conjugation_residual: f64,
    /// `max ‖τ₀(aΩ) − UΔ^{1/2}(aΩ)‖`.
    pub polar_residual: f64,
    pub passed: bool,
}

pub const TOMITA_TOL: f64 = 1e-10;

/// `aᵗξ = J a* J ξ` and `τ₀ = UΔ^{1/2}` on random `a`, `ξ`.
pub fn verify_transposition_structure(
    sf: &StandardForm,
    trials: usize,
    seed: u64,
) -> Result<TranspositionReport> {
    let mut r = rng::seeded(seed);
    let d = sf.dim();
    let (mut c_res, mut p_res) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let a = rng::ginibre(&mut r, d, d);
        let xi = rng::ginibre(&mut r, d, d);
        let lhs = sf.transpose_op(&a).matmul(&xi);
        let rhs = sf.j(&a.adjoint().matmul(&sf.j(&xi)));
        c_res = c_res.max(lhs.distance(&rhs) / (a.frobenius_norm() * xi.frobenius_norm()));
        let a_omega = a.matmul(sf.omega());
        let tau = sf.tau0(&a_omega)?;
        let polar = sf.u(&sf.delta_power(&a_omega, 0.5));
        p_res = p_res.max(tau.distance(&polar) / a.frobenius_norm());
    }
    Ok(TranspositionReport {
        trials,
        conjugation_residual: c_res,
        polar_residual: p_res,
        passed: c_res <= TOMITA_TOL && p_res <= TOMITA_TOL,
    })
}

/// Vector of Hilbert–Schmidt space tagged with a bipartite split.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeVector {
    pub split: FactorSplit,
    pub x: CMat,
}

impl ConeVector {
    pub fn new(split: FactorSplit, x: CMat) -> Result<Self> {
        if !x.is_square() || x.rows() != split.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cone vector of side {} for split {split}",
                x.rows()
            )));
        }
        Ok(Self { split, x })
    }

    pub fn norm(&self) -> f64 {
        self.x.frobenius_norm()
    }
}

/// The unique PSD `ξ = σ^{1/2}` with `Tr(ξ* a ξ) = Tr(σa)`.
pub fn cone_representative(sigma: &CMat) -> Result<CMat> {
    frac_power(sigma, 0.5)
}

/// `ω_{Uξ}(a) = (Uξ, aUξ)`; for PSD `ξ` this is `ω_ξ(aᵗ)`.
pub fn transpose_cone_vector(xi: &CMat, sf: &StandardForm) -> CMat {
    sf.u(xi)
}

/// Reference product state `ρ_A⊗ρ_B`, diagonal in the computational basis,
/// together with the local unitaries that diagonalized the inputs.
#[derive(Clone, Debug)]
pub struct ConeContext {
    split: FactorSplit,
    diag_a: Vec<f64>,
    diag_b: Vec<f64>,
    pub rotation_a: CMat,
    pub rotation_b: CMat,
}

impl ConeContext {
    /// Diagonal faithful reference densities.
    pub fn diagonal(diag_a: &[f64], diag_b: &[f64]) -> Result<Self> {
        for &v in diag_a.iter().chain(diag_b) {
            if v.is_nan() || v <= FAITHFUL_MIN {
                return Err(Error::NotFaithful { min_eig: v });
            }
        }
        let split = FactorSplit::new(diag_a.len(), diag_b.len())?;
        Ok(Self {
            split,
            diag_a: diag_a.to_vec(),
            diag_b: diag_b.to_vec(),
            rotation_a: CMat::identity(split.d_a),
            rotation_b: CMat::identity(split.d_b),
        })
    }

    /// `I/dA ⊗ I/dB`.
    pub fn maximally_mixed(split: FactorSplit) -> Self {
        Self::diagonal(
            &vec![1.0 / split.d_a as f64; split.d_a],
            &vec![1.0 / split.d_b as f64; split.d_b],
        )
        .expect("uniform weights are faithful")
    }

    /// Diagonalizes arbitrary faithful densities; `rotation_*` holds the
    /// eigenbases, so inputs in the original frame must be conjugated by them.
    pub fn from_densities(rho_a: &CMat, rho_b: &CMat) -> Result<Self> {
        let ea = eig_hermitian(rho_a)?;
        let eb = eig_hermitian(rho_b)?;
        let mut ctx = Self::diagonal(&ea.values, &eb.values)?;
        ctx.rotation_a = ea.vectors;
        ctx.rotation_b = eb.vectors;
        Ok(ctx)
    }

    pub fn split(&self) -> FactorSplit {
        self.split
    }

    pub fn rho_a(&self) -> CMat {
        CMat::from_real_diag(&self.diag_a)
    }

    pub fn rho_b(&self) -> CMat {
        CMat::from_real_diag(&self.diag_b)
    }

    pub fn rho(&self) -> CMat {
        tensor_product(&self.rho_a(), &self.rho_b())
    }

    fn rho_diag_power(&self, p: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.split.dim());
        for a in &self.diag_a {
            for b in &self.diag_b {
                out.push((a * b).powf(p));
            }
        }
        out
    }

    fn scale_sides(&self, x: &CMat, left: f64, right: f64) -> CMat {
        let l = self.rho_diag_power(left);
        let r = self.rho_diag_power(right);
        CMat::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * (l[i] * r[j]))
    }

    /// `Δ^p(X) = ρ^p X ρ^{-p}`.
    pub fn delta_power(&self, x: &CMat, p: f64) -> CMat {
        self.scale_sides(x, p, -p)
    }

    pub fn j_modular(&self, x: &CMat) -> CMat {
        x.adjoint()
    }

    /// `1⊗U`: transposition of the second factor.
    pub fn one_u(&self, x: &CMat) -> CMat {
        partial_transpose(x, self.split, Subsystem::B).expect("cone vector matches split")
    }

    /// `Δ^{1/4}AΩ = ρ^{1/4}Aρ^{1/4}`.
    pub fn cone_vector_of_operator(&self, a: &CMat) -> Result<ConeVector> {
        let (ok, min) = is_psd(a)?;
        if !ok {
            return Err(Error::NotPsd { min_eig: min });
        }
        ConeVector::new(self.split, self.scale_sides(a, 0.25, 0.25))
    }

    /// `A = ρ^{-1/4}Xρ^{-1/4}`.
    pub fn operator_of_cone_vector(&self, x: &CMat) -> CMat {
        self.scale_sides(x, -0.25, -0.25)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeMembership {
    pub in_pn: bool,
    pub in_pn_tau: bool,
    pub in_intersection: bool,
    /// Minimum eigenvalues of `X` and `X^{t_B}`.
    pub min_eig_x: f64,
    pub min_eig_x_gamma: f64,
    /// The same verdicts read off `A = ρ^{-1/4}Xρ^{-1/4}` and `A^{t_B}`.
    pub in_pn_operator: bool,
    pub in_pn_tau_operator: bool,
    pub forms_agree: bool,
}

fn hermitian_psd(x: &CMat) -> Result<(bool, f64)> {
    if !x.is_hermitian(1e-10) {
        let min = eig_hermitian(&x.hermitian_part())?.min_value();
        return Ok((false, min));
    }
    is_psd(&x.hermitian_part())
}

pub fn cone_membership(xi: &ConeVector, ctx: &ConeContext) -> Result<ConeMembership> {
    if xi.split != ctx.split {
        return Err(Error::DimensionMismatch(format!(
            "cone vector split {} vs context {}",
            xi.split, ctx.split
        )));
    }
    let (in_pn, min_eig_x) = hermitian_psd(&xi.x)?;
    let (in_pn_tau, min_eig_x_gamma) = hermitian_psd(&ctx.one_u(&xi.x))?;
    let a = ctx.operator_of_cone_vector(&xi.x);
    let (in_pn_operator, _) = hermitian_psd(&a)?;
    let (in_pn_tau_operator, _) = hermitian_psd(&ctx.one_u(&a))?;
    Ok(ConeMembership {
        in_pn,
        in_pn_tau,
        in_intersection: in_pn && in_pn_tau,
        min_eig_x,
        min_eig_x_gamma,
        in_pn_operator,
        in_pn_tau_operator,
        forms_agree: in_pn == in_pn_operator && in_pn_tau == in_pn_tau_operator,
    })
}

/// `ω^τ(x) = ω(x^{t_B})` carried by `σ^{t_B}`, which is a state only for PPT `σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransposedFunctional {
    pub carrier: CMat,
    pub is_state: bool,
}

pub fn transposed_functional(s: &BipartiteState) -> TransposedFunctional {
    let v = is_ppt(s);
    TransposedFunctional {
        carrier: partial_transpose(s.rho(), s.split(), Subsystem::B).expect("state matches split"),
        is_state: v.is_ppt,
    }
}

/// Evidence record comparing the density-level, map-level and cone-level
/// descriptions of one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub density_ppt: bool,
    pub density_min_eig: f64,
    pub map_cp_and_cocp: bool,
    pub sqrt_vector: ConeMembership,
    pub operator_vector: ConeMembership,
    /// Probe values of `ω(a⊗bᵗ)` and `Tr(ξ*(a⊗1)ξ(1⊗bᵗ))` with `ξ = σ^{1/2}`.
    pub eq_u_lhs: Vec<(f64, f64)>,
    pub eq_u_rhs: Vec<(f64, f64)>,
    pub eq_u_residual: f64,
    /// Trace of the reduced-state cone representative `(Tr_B σ)^{1/2}`.
    pub reduced_representative_trace: f64,
}

pub fn compare_characterizations(
    s: &BipartiteState,
    ctx: &ConeContext,
    probes: usize,
    seed: u64,
) -> Result<ComparisonRecord> {
    let split = s.split();
    if split != ctx.split() {
        return Err(Error::DimensionMismatch(format!(
            "state split {split} vs context {}",
            ctx.split()
        )));
    }
    let v = is_ppt(s);
    let phi_star = EntanglingOperator::new(s)?.phi_star();
    let cp = classify_cp(&phi_star)?;
    let xi = cone_representative(s.rho())?;
    let sqrt_vector = cone_membership(&ConeVector::new(split, xi.clone())?, ctx)?;
    let operator_vector = cone_membership(&ctx.cone_vector_of_operator(s.rho())?, ctx)?;
    let mut r = rng::seeded(seed);
    let (mut lhs_v, mut rhs_v) = (Vec::new(), Vec::new());
    let mut residual = 0.0f64;
    let id_a = CMat::identity(split.d_a);
    let id_b = CMat::identity(split.d_b);
    for _ in 0..probes {
        let a = rng::random_hermitian(&mut r, split.d_a);
        let b = rng::random_hermitian(&mut r, split.d_b);
        let bt = b.transpose();
        let lhs = s.expectation(&a, &bt);
        let rhs = xi
            .adjoint()
            .matmul(&tensor_product(&a, &id_b))
            .matmul(&xi)
            .matmul(&tensor_product(&id_a, &bt))
            .trace();
        residual = residual.max((lhs - rhs).norm());
        lhs_v.push((lhs.re, lhs.im));
        rhs_v.push((rhs.re, rhs.im));
    }
    let reduced = partial_trace(s.rho(), split, Subsystem::B)?;
    let chi = cone_representative(&reduced)?;
    Ok(ComparisonRecord {
        density_ppt: v.is_ppt,
        density_min_eig: v.min_eig,
        map_cp_and_cocp: cp.cp && cp.co_cp,
        sqrt_vector,
        operator_vector,
        eq_u_lhs: lhs_v,
        eq_u_rhs: rhs_v,
        eq_u_residual: residual,
        reduced_representative_trace: chi.trace().re,
    })
}
