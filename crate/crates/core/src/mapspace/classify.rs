use serde::Serialize;

use super::LinearMap;
use crate::matcore::{
    eig_hermitian, is_psd, partial_transpose_unchecked, psd_project, vector, Subsystem,
};
use crate::rng;
use crate::{CMat, Error, Result, C64};

/// Complete positivity and complete copositivity from the Choi spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CpVerdict {
    pub cp: bool,
    pub co_cp: bool,
    pub min_choi_eig: f64,
    pub min_co_choi_eig: f64,
}

pub fn classify_cp(m: &LinearMap) -> Result<CpVerdict> {
    let h = hermitian_choi(m)?;
    let (cp, min_choi_eig) = is_psd(&h)?;
    let (co_cp, min_co_choi_eig) =
        is_psd(&partial_transpose_unchecked(&h, m.split(), Subsystem::B))?;
    Ok(CpVerdict {
        cp,
        co_cp,
        min_choi_eig,
        min_co_choi_eig,
    })
}

fn hermitian_choi(m: &LinearMap) -> Result<CMat> {
    if !m.is_hermitian_preserving() {
        return Err(Error::NotHermitianPreserving {
            asymmetry: m.choi().asymmetry(),
        });
    }
    Ok(m.choi().hermitian_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchBudget {
    pub starts: usize,
    pub iters: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            starts: 20,
            iters: 200,
        }
    }
}

/// Result of the positivity search. `NoViolationFound` is not a proof.
#[derive(Clone, Debug, PartialEq)]
pub enum Positivity {
    VerifiedViolation {
        x: Vec<C64>,
        y: Vec<C64>,
        value: f64,
    },
    NoViolationFound {
        min_found: f64,
    },
}

impl Positivity {
    pub fn is_violation(&self) -> bool {
        matches!(self, Positivity::VerifiedViolation { .. })
    }

    pub fn value(&self) -> f64 {
        match self {
            Positivity::VerifiedViolation { value, .. } => *value,
            Positivity::NoViolationFound { min_found } => *min_found,
        }
    }
}

const VIOLATION_THRESHOLD: f64 = -1e-8;

fn quadratic_form(m: &LinearMap, x: &[C64], y: &[C64]) -> f64 {
    let img = m
        .apply(&CMat::outer(x, x))
        .expect("x has the input dimension");
    img.sandwich(y, y).re
}

/// Alternating minimization of `⟨y|m(|x⟩⟨x|)|y⟩` over unit `x`, `y`. Each
/// half-step is an exact minimum-eigenvector solve, so the value never rises.
pub fn is_positive_map(m: &LinearMap, budget: SearchBudget, seed: u64) -> Result<Positivity> {
    let (din, dout) = (m.d_in(), m.d_out());
    let mut r = rng::seeded(seed);
    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    for start in 0..budget.starts.max(1) {
        let mut x = if start < din {
            vector::basis(din, start)
        } else {
            rng::random_unit_vector(&mut r, din)
        };
        let mut y = vector::basis(dout, 0);
        let mut val = f64::INFINITY;
        for _ in 0..budget.iters.max(1) {
            let e = eig_hermitian(&m.apply(&CMat::outer(&x, &x))?.hermitian_part())?;
            y = e.vector(0);
            // G[i,j] = ⟨y|m(E_ij)|y⟩, and ⟨y|m(xx*)|y⟩ = ū*Gu with u = x̄
            let g = CMat::from_fn(din, din, |i, j| {
                let mut s = C64::new(0.0, 0.0);
                for p in 0..dout {
                    for q in 0..dout {
                        s += y[p].conj() * m.choi()[(i * dout + p, j * dout + q)] * y[q];
                    }
                }
                s
            });
            let ge = eig_hermitian(&g.transpose().hermitian_part())?;
            x = ge.vector(0);
            let nv = ge.min_value();
            let done = (val - nv).abs() <= 1e-14 * (1.0 + nv.abs());
            val = nv;
            if done {
                break;
            }
        }
        let direct = quadratic_form(m, &x, &y);
        if best.as_ref().is_none_or(|b| direct < b.0) {
            best = Some((direct, x, y));
        }
    }
    let (value, x, y) = best.expect("at least one start");
    Ok(if value < VIOLATION_THRESHOLD {
        Positivity::VerifiedViolation { x, y, value }
    } else {
        Positivity::NoViolationFound { min_found: value }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompOptions {
    /// Cap on alternating projection rounds.
    pub max_iter: usize,
    /// Outer projected-gradient steps of the dual search.
    pub dual_iter: usize,
    /// Inner Dykstra rounds per dual projection.
    pub dual_inner: usize,
    pub feasibility_tol: f64,
    pub certificate_tol: f64,
}

impl Default for DecompOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            dual_iter: 300,
            dual_inner: 300,
            feasibility_tol: 1e-7,
            certificate_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decomposability {
    /// `Choi = P + Q^Γ` with `P, Q ⪰ 0`.
    Feasible {
        p: CMat,
        q: CMat,
        residual: f64,
    },
    /// Unit-trace PPT matrix `X` with `Tr(Choi·X) = value < 0`.
    Certificate {
        witness: CMat,
        value: f64,
    },
    Inconclusive {
        residual: f64,
        best_value: f64,
    },
}

impl Decomposability {
    pub fn label(&self) -> &'static str {
        match self {
            Decomposability::Feasible { .. } => "feasible",
            Decomposability::Certificate { .. } => "certificate",
            Decomposability::Inconclusive { .. } => "inconclusive",
        }
    }
}

pub fn is_decomposable(m: &LinearMap, opts: DecompOptions) -> Result<Decomposability> {
    let c = hermitian_choi(m)?;
    let split = m.split();
    let gamma = |x: &CMat| partial_transpose_unchecked(x, split, Subsystem::B);
    let n = c.rows();
    let cp = classify_cp(m)?;
    if cp.cp {
        return Ok(Decomposability::Feasible {
            p: c,
            q: CMat::zeros(n, n),
            residual: 0.0,
        });
    }
    if cp.co_cp {
        return Ok(Decomposability::Feasible {
            p: CMat::zeros(n, n),
            q: gamma(&c),
            residual: 0.0,
        });
    }

    let scale = c.frobenius_norm().max(1e-300);
    let mut p = psd_project(&c)?;
    let mut q = psd_project(&gamma(&(&c - &p)))?;
    for _ in 0..opts.max_iter {
        let r = &(&c - &p) - &gamma(&q);
        let residual = r.frobenius_norm();
        if residual <= opts.feasibility_tol {
            return Ok(Decomposability::Feasible { p, q, residual });
        }
        let half = r.scale_re(0.5);
        let p_new = psd_project(&(&p + &half))?;
        let q_new = psd_project(&(&q + &gamma(&half)))?;
        let step = p_new.distance(&p) + q_new.distance(&q);
        p = p_new;
        q = q_new;
        if step <= 1e-15 * scale {
            break;
        }
    }
    let r = &(&c - &p) - &gamma(&q);
    let residual = r.frobenius_norm();
    if residual <= opts.feasibility_tol {
        return Ok(Decomposability::Feasible { p, q, residual });
    }

    // At a fixed point of the alternation −R is PSD with PSD partial
    // transpose, and Tr(C·(−R)) = −‖R‖², so it seeds the dual search.
    let mut starts = vec![CMat::identity(n).scale_re(1.0 / n as f64)];
    let neg_r = r.scale_re(-1.0);
    let t = neg_r.trace().re;
    if t > 0.0 {
        starts.insert(0, neg_r.scale_re(1.0 / t));
    }
    let mut best: Option<(f64, CMat)> = None;
    for x0 in starts {
        if let Some((v, x)) = dual_search(&c, x0, split, opts)? {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, x));
            }
        }
    }
    match best {
        Some((value, witness)) if value < -opts.certificate_tol => {
            Ok(Decomposability::Certificate { witness, value })
        }
        Some((value, _)) => Ok(Decomposability::Inconclusive {
            residual,
            best_value: value,
        }),
        None => Ok(Decomposability::Inconclusive {
            residual,
            best_value: f64::NAN,
        }),
    }
}

/// Projected gradient for `min Tr(C·X)` over `{X ⪰ 0, X^Γ ⪰ 0, Tr X = 1}`.
/// Returns the best repaired, re-validated iterate.
fn dual_search(
    c: &CMat,
    x0: CMat,
    split: crate::matcore::FactorSplit,
    opts: DecompOptions,
) -> Result<Option<(f64, CMat)>> {
    let cn = c.scale_re(1.0 / c.frobenius_norm().max(1e-300));
    let mut x = project_ppt_slice(&x0, split, opts.dual_inner)?;
    let mut best: Option<(f64, CMat)> = None;
    let mut eta = 0.5;
    for k in 0..opts.dual_iter.max(1) {
        if let Some(cand) = repair(&x, split)? {
            let v = c.hs_inner(&cand).re;
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, cand));
            }
        }
        let y = &x - &cn.scale_re(eta);
        x = project_ppt_slice(&y, split, opts.dual_inner)?;
        if k % 50 == 49 {
            eta *= 0.5;
        }
    }
    if let Some(cand) = repair(&x, split)? {
        let v = c.hs_inner(&cand).re;
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, cand));
        }
    }
    Ok(best)
}

/// Mixes in the identity until both `X` and `X^Γ` are PSD, then renormalizes
/// and re-checks independently.
fn repair(x: &CMat, split: crate::matcore::FactorSplit) -> Result<Option<CMat>> {
    let n = x.rows();
    let h = x.hermitian_part();
    let gx = partial_transpose_unchecked(&h, split, Subsystem::B);
    let lo = eig_hermitian(&h)?
        .min_value()
        .min(eig_hermitian(&gx)?.min_value());
    let delta = (-lo).max(0.0) * (1.0 + 1e-9) + if lo < 0.0 { 1e-15 } else { 0.0 };
    let y = &h + &CMat::identity(n).scale_re(delta);
    let t = y.trace().re;
    if t <= 0.0 {
        return Ok(None);
    }
    let y = y.scale_re(1.0 / t);
    let (ok1, _) = is_psd(&y)?;
    let (ok2, _) = is_psd(&partial_transpose_unchecked(&y, split, Subsystem::B))?;
    Ok(if ok1 && ok2 { Some(y) } else { None })
}

/// Dykstra over the PSD cone, the partially transposed PSD cone and the
/// unit-trace hyperplane.
fn project_ppt_slice(x0: &CMat, split: crate::matcore::FactorSplit, iters: usize) -> Result<CMat> {
    let n = x0.rows();
    let gamma = |x: &CMat| partial_transpose_unchecked(x, split, Subsystem::B);
    let mut x = x0.hermitian_part();
    let mut incr = [CMat::zeros(n, n), CMat::zeros(n, n), CMat::zeros(n, n)];
    for _ in 0..iters.max(1) {
        let before = x.clone();
        for (k, inc) in incr.iter_mut().enumerate() {
            let z = &x + inc;
            let px = match k {
                0 => psd_project(&z)?,
                1 => gamma(&psd_project(&gamma(&z))?),
                _ => {
                    let shift = (1.0 - z.trace().re) / n as f64;
                    &z + &CMat::identity(n).scale_re(shift)
                }
            };
            *inc = &z - &px;
            x = px;
        }
        if x.distance(&before) < 1e-13 {
            break;
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapClassification {
    pub cp: CpVerdict,
    pub positive: Positivity,
    pub decomposable: Decomposability,
}

pub fn classify(
    m: &LinearMap,
    budget: SearchBudget,
    opts: DecompOptions,
    seed: u64,
) -> Result<MapClassification> {
    Ok(MapClassification {
        cp: classify_cp(m)?,
        positive: is_positive_map(m, budget, seed)?,
        decomposable: is_decomposable(m, opts)?,
    })
}
