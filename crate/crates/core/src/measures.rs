//! Distance measures of entanglement for cone vectors: `D_ge`, the distance
//! to `P_n ∩ P_n^τ`, computed by Dykstra projection, and `D_e`, the distance
//! to the separable cone, bracketed by `D_ge` below and a see-saw fit above.

use rayon::prelude::*;
use serde::Serialize;

use crate::matcore::{
    eig_hermitian, min_eig, operator_norm, partial_transpose, psd_project, vector, FactorSplit,
    Subsystem,
};
use crate::rng;
use crate::states::max_entangled_projector;
use crate::tomita::ConeVector;
use crate::{CMat, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DykstraOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DykstraResult {
    pub projection: ConeVector,
    pub distance: f64,
    pub iterations: usize,
    /// Minimum eigenvalues of the projection and of its partial transpose.
    pub feasibility: (f64, f64),
    /// `false` when the iteration cap was hit; the projection is then the last iterate.
    pub converged: bool,
    /// Whether `‖ξ − x_k‖` never increased between outer iterations. Recorded
    /// only: the iterates start at `ξ` and usually move away from it.
    pub distance_nonincreasing: bool,
    /// `|Tr(p y)| + |Tr(q x)| + ‖x − y‖` for the Dykstra increments `p`, `q`;
    /// together with `p ⪯ 0` and `q^Γ ⪯ 0` this certifies optimality.
    pub kkt_gap: f64,
    /// Frobenius norm of the anti-Hermitian part discarded on input.
    pub anti_hermitian_residual: f64,
}

fn project_psd(x: &CMat) -> Result<CMat> {
    psd_project(&x.hermitian_part())
}

fn project_ppt(x: &CMat, split: FactorSplit) -> Result<CMat> {
    let g = partial_transpose(x, split, Subsystem::B)?;
    partial_transpose(&project_psd(&g)?, split, Subsystem::B)
}

/// Dykstra's alternating projections onto the PSD cone and the cone of
/// matrices with PSD partial transpose.
pub fn dykstra_project(xi: &ConeVector, opts: &DykstraOptions) -> Result<DykstraResult> {
    let split = xi.split;
    let anti = if xi.x.is_hermitian(1e-12) {
        0.0
    } else {
        log::warn!(
            "dykstra_project: input is not Hermitian (asymmetry {:e}); using its Hermitian part",
            xi.x.asymmetry()
        );
        (&xi.x - &xi.x.hermitian_part()).frobenius_norm()
    };
    let target = xi.x.hermitian_part();
    let scale = target.frobenius_norm().max(1.0);
    let n = target.rows();
    let mut x = target.clone();
    let mut y = target.clone();
    let mut p = CMat::zeros(n, n);
    let mut q = CMat::zeros(n, n);
    let mut last_dist = 0.0;
    let mut nonincreasing = true;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let xp = &x + &p;
        let y_new = project_psd(&xp)?;
        p = &xp - &y_new;
        let yq = &y_new + &q;
        let x_new = project_ppt(&yq, split)?;
        q = &yq - &x_new;
        let change = x_new.distance(&x).max(y_new.distance(&y));
        x = x_new;
        y = y_new;
        let dist = target.distance(&x);
        if dist > last_dist * (1.0 + 1e-12) + 1e-15 && iterations > 1 {
            nonincreasing = false;
        }
        last_dist = dist;
        if change <= opts.tol * scale && x.distance(&y) <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    let kkt_gap = p.hs_inner(&y).norm() + q.hs_inner(&x).norm() + x.distance(&y);
    let feasibility = (
        min_eig(&x.hermitian_part())?,
        min_eig(&partial_transpose(&x, split, Subsystem::B)?.hermitian_part())?,
    );
    let dist = target.distance(&x);
    Ok(DykstraResult {
        distance: (dist * dist + anti * anti).sqrt(),
        projection: ConeVector { split, x },
        iterations,
        feasibility,
        converged,
        distance_nonincreasing: nonincreasing,
        kkt_gap,
        anti_hermitian_residual: anti,
    })
}

/// Distance to `P_n ∩ P_n^τ`.
pub fn d_ge(xi: &ConeVector) -> Result<f64> {
    Ok(dykstra_project(xi, &DykstraOptions::default())?.distance)
}

/// Lower bound on `D_e`: the separable cone sits inside `P_n ∩ P_n^τ`.
pub fn d_e_lower(xi: &ConeVector) -> Result<f64> {
    d_ge(xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeesawOptions {
    /// Number of product terms; `None` means `(dA·dB)²`.
    pub terms: Option<usize>,
    pub restarts: usize,
    pub iters: usize,
    /// Extra iterations spent on the winning restart only.
    pub polish_iters: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            terms: None,
            restarts: 20,
            iters: 2000,
            polish_iters: 50_000,
        }
    }
}

type Terms = Vec<(Vec<C64>, Vec<C64>)>;

/// Feasible separable approximant `Σ x_kx_k*⊗y_ky_k*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableApprox {
    pub split: FactorSplit,
    pub terms: Terms,
    pub value: f64,
    pub restarts_used: usize,
}

impl SeparableApprox {
    pub fn approximant(&self) -> CMat {
        assemble_products(self.split, &self.terms)
    }
}

fn assemble_products(split: FactorSplit, terms: &[(Vec<C64>, Vec<C64>)]) -> CMat {
    let n = split.dim();
    let mut s = CMat::zeros(n, n);
    for (x, y) in terms {
        let v = vector::kron(x, y);
        let data = s.as_mut_slice();
        for i in 0..n {
            let vi = v[i];
            for j in 0..n {
                data[i * n + j] += vi * v[j].conj();
            }
        }
    }
    s
}

/// Objective on the assembled matrix: value and Hermitian gradient `G`
/// with `df = Re Tr(G dS)`.
trait ProductObjective: Sync {
    fn eval(&self, s: &CMat) -> Result<(f64, CMat)>;
}

struct Frobenius<'a> {
    target: &'a CMat,
}

impl ProductObjective for Frobenius<'_> {
    fn eval(&self, s: &CMat) -> Result<(f64, CMat)> {
        let r = s - self.target;
        let f = r.frobenius_norm();
        Ok((f * f, r.scale_re(2.0)))
    }
}

/// Soft maximum of `|eig(P − S)|` at inverse temperature `beta`.
struct SmoothOpNorm<'a> {
    target: &'a CMat,
    beta: f64,
}

impl ProductObjective for SmoothOpNorm<'_> {
    fn eval(&self, s: &CMat) -> Result<(f64, CMat)> {
        let m = (self.target - s).hermitian_part();
        let e = eig_hermitian(&m)?;
        let top = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut z = 0.0;
        let mut w = vec![0.0; e.dim()];
        for (k, &mu) in e.values.iter().enumerate() {
            let up = (self.beta * (mu - top)).exp();
            let dn = (self.beta * (-mu - top)).exp();
            z += up + dn;
            w[k] = up - dn;
        }
        let f = top + z.ln() / self.beta;
        let n = m.rows();
        let mut g = CMat::zeros(n, n);
        for (k, wk) in w.iter().enumerate() {
            let u = e.vector(k);
            g += &CMat::outer(&u, &u).scale_re(-wk / z);
        }
        Ok((f, g))
    }
}

/// Gradient of the objective with respect to each factor: with `v = x⊗y`
/// and `w = Gv`, `∂x = 2(1⊗y*)w`, `∂y = 2(x*⊗1)w`.
fn factor_gradients(split: FactorSplit, terms: &[(Vec<C64>, Vec<C64>)], g: &CMat) -> Terms {
    let (da, db) = (split.d_a, split.d_b);
    terms
        .iter()
        .map(|(x, y)| {
            let w = g.matvec(&vector::kron(x, y));
            let mut gx = vec![C64::new(0.0, 0.0); da];
            let mut gy = vec![C64::new(0.0, 0.0); db];
            for a in 0..da {
                for b in 0..db {
                    let wab = w[a * db + b];
                    gx[a] += y[b].conj() * wab * 2.0;
                    gy[b] += x[a].conj() * wab * 2.0;
                }
            }
            (gx, gy)
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Block {
    X,
    Y,
}

/// Alternating backtracking gradient steps on the `x` and `y` factors.
fn seesaw_descent(
    split: FactorSplit,
    mut terms: Terms,
    obj: &dyn ProductObjective,
    iters: usize,
) -> Result<(Terms, f64)> {
    let mut steps = [1e-2, 1e-2];
    let (mut f, mut g) = obj.eval(&assemble_products(split, &terms))?;
    let mut stall = 0;
    for _ in 0..iters {
        let f_start = f;
        for (bi, block) in [Block::X, Block::Y].into_iter().enumerate() {
            let grads = factor_gradients(split, &terms, &g);
            let gnorm2: f64 = grads
                .iter()
                .map(|(gx, gy)| match block {
                    Block::X => vector::norm(gx).powi(2),
                    Block::Y => vector::norm(gy).powi(2),
                })
                .sum();
            if gnorm2 == 0.0 {
                continue;
            }
            let mut t = steps[bi];
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Terms = terms
                    .iter()
                    .zip(&grads)
                    .map(|((x, y), (gx, gy))| match block {
                        Block::X => (
                            x.iter().zip(gx).map(|(a, b)| a - b * t).collect(),
                            y.clone(),
                        ),
                        Block::Y => (
                            x.clone(),
                            y.iter().zip(gy).map(|(a, b)| a - b * t).collect(),
                        ),
                    })
                    .collect();
                let (ft, gt) = obj.eval(&assemble_products(split, &trial))?;
                if ft <= f - 1e-4 * t * gnorm2 {
                    terms = trial;
                    f = ft;
                    g = gt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            steps[bi] = if accepted { t * 2.0 } else { t.max(1e-12) };
        }
        rebalance(&mut terms);
        if f_start - f <= 1e-15 * f_start.abs().max(1e-300) {
            stall += 1;
            if stall >= 20 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    Ok((terms, f))
}

/// Equalizes `‖x_k‖ = ‖y_k‖`, which leaves each product unchanged.
fn rebalance(terms: &mut [(Vec<C64>, Vec<C64>)]) {
    for (x, y) in terms.iter_mut() {
        let (nx, ny) = (vector::norm(x), vector::norm(y));
        if nx > 0.0 && ny > 0.0 {
            let s = (ny / nx).sqrt();
            x.iter_mut().for_each(|v| *v *= s);
            y.iter_mut().for_each(|v| *v /= s);
        }
    }
}

fn random_terms(split: FactorSplit, k: usize, mass: f64, seed: u64) -> Terms {
    let mut r = rng::seeded(seed);
    let s = (mass.max(1e-3) / k as f64).powf(0.25);
    (0..k)
        .map(|_| {
            let x: Vec<C64> = rng::random_unit_vector(&mut r, split.d_a)
                .into_iter()
                .map(|v| v * s)
                .collect();
            let y: Vec<C64> = rng::random_unit_vector(&mut r, split.d_b)
                .into_iter()
                .map(|v| v * s)
                .collect();
            (x, y)
        })
        .collect()
}

/// Runs restarts in parallel; the reduction keeps the smallest value, ties
/// going to the lower restart index.
fn best_of_restarts<F>(restarts: usize, run: F) -> Result<(usize, Terms, f64)>
where
    F: Fn(usize) -> Result<(Terms, f64)> + Sync,
{
    let results: Vec<Result<(Terms, f64)>> =
        (0..restarts.max(1)).into_par_iter().map(&run).collect();
    let mut best: Option<(usize, Terms, f64)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let (terms, v) = r?;
        if best.as_ref().is_none_or(|b| v < b.2) {
            best = Some((i, terms, v));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Upper bound on `D_e`: the best separable fit found over the restarts.
pub fn d_e_upper(xi: &ConeVector, opts: &SeesawOptions, seed: u64) -> Result<SeparableApprox> {
    let split = xi.split;
    let target = xi.x.hermitian_part();
    let k = opts.terms.unwrap_or(split.dim() * split.dim()).max(1);
    let mass = target.trace().re;
    let obj = Frobenius { target: &target };
    let (_, terms, _) = best_of_restarts(opts.restarts, |i| {
        let init = random_terms(split, k, mass, rng::derive_seed(seed, i as u64));
        seesaw_descent(split, init, &obj, opts.iters)
    })?;
    let (terms, _) = seesaw_descent(split, terms, &obj, opts.polish_iters)?;
    let value = xi.x.distance(&assemble_products(split, &terms));
    Ok(SeparableApprox {
        split,
        terms,
        value,
        restarts_used: opts.restarts.max(1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

pub fn d_e_sandwich(xi: &ConeVector, opts: &SeesawOptions, seed: u64) -> Result<Sandwich> {
    Ok(Sandwich {
        lower: d_e_lower(xi)?,
        upper: d_e_upper(xi, opts, seed)?.value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpNormExperiment {
    pub d: usize,
    pub trials: usize,
    pub terms: usize,
    /// Heuristic: smallest `‖P − S‖_op` over the separable `S` visited.
    pub min_opnorm_found: f64,
}

/// Searches for separable `S = Σ a_i⊗b_i` close to the maximally entangled
/// projector in operator norm. A smoothed maximum of `|eig(P − S)|` is
/// annealed toward the operator norm; each restart is scored by the exact
/// operator norm of its final, feasible `S`.
pub fn kr_opnorm_experiment(d: usize, trials: usize, seed: u64) -> Result<OpNormExperiment> {
    let split = FactorSplit::new(d, d)?;
    let p = max_entangled_projector(d);
    let terms = 20;
    let schedule = [20.0, 100.0, 500.0, 2500.0, 10000.0];
    let (_, _, best) = best_of_restarts(trials, |i| {
        let mut cur = random_terms(split, terms, 1.0, rng::derive_seed(seed, i as u64));
        for beta in schedule {
            let obj = SmoothOpNorm { target: &p, beta };
            cur = seesaw_descent(split, cur, &obj, 200)?.0;
        }
        let v = operator_norm(&(&p - &assemble_products(split, &cur)))?;
        Ok((cur, v))
    })?;
    Ok(OpNormExperiment {
        d,
        trials: trials.max(1),
        terms,
        min_opnorm_found: best,
    })
}

/// Measure bounds for `ξ = ρ^{1/4}Pρ^{1/4}` with `ρ = I/d²`, that is `ξ = P/d`.
/// `rescaled` divides by `‖ξ‖_F = 1/d`, normalizing the vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorSandwich {
    pub d: usize,
    pub xi_norm: f64,
    pub raw: Sandwich,
    pub rescaled: Sandwich,
    pub quoted_bound: f64,
    /// `raw.upper ≥ quoted_bound`: the computed bracket does not contradict the bound.
    pub consistent: bool,
}

pub fn projector_sandwich(d: usize, opts: &SeesawOptions, seed: u64) -> Result<ProjectorSandwich> {
    let split = FactorSplit::new(d, d)?;
    let xi = ConeVector::new(split, max_entangled_projector(d).scale_re(1.0 / d as f64))?;
    let raw = d_e_sandwich(&xi, opts, seed)?;
    let xi_norm = xi.norm();
    let rescaled = Sandwich {
        lower: raw.lower / xi_norm,
        upper: raw.upper / xi_norm,
    };
    let quoted_bound = match d {
        2 => 1.0 / 8.0,
        3 => 1.0 / 12.0,
        _ => 0.0,
    };
    Ok(ProjectorSandwich {
        d,
        xi_norm,
        consistent: raw.upper >= quoted_bound - 1e-12,
        raw,
        rescaled,
        quoted_bound,
    })
}
