//! Seeded verification suites. Each suite returns check records in a fixed
//! order; instances carry seeds derived from the suite seed and their index,
//! so reports do not depend on scheduling.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cklmaps::{self, CklParams, BOUNDARY_BAND};
use crate::entangling::{
    cp_violation_witness_pure, qutrit_pair_maps, qutrit_x1_image, verify_representation,
    EntanglingOperator,
};
use crate::io::{CheckRecord, RunReport, Status};
use crate::mapspace::{
    classify_cp, is_decomposable, pair_map_functional, DecompOptions, Decomposability, LinearMap,
    PairingConvention,
};
use crate::matcore::{
    frac_power, min_eig, operator_norm, partial_transpose, tensor_product, vector, FactorSplit,
    Subsystem,
};
use crate::measures::{
    d_e_upper, dykstra_project, kr_opnorm_experiment, projector_sandwich, DykstraOptions,
    SeesawOptions,
};
use crate::states::{
    is_ppt, isotropic, max_entangled_projector, random_separable, random_state, BipartiteState,
};
use crate::stormer::{
    canonical_decomposition, hyponormality_gap, random_normal_pair, resplit_experiment,
    stormer_condition, zhan_factor, StormerPair, RECONSTRUCTION_TOL,
};
use crate::tomita::{
    check_standard_form, compare_characterizations, cone_membership, cone_representative,
    standard_form, transpose_cone_vector, verify_transposition_structure, ConeContext, ConeVector,
    TOMITA_TOL,
};
use crate::{rng, CMat, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteName {
    #[serde(rename = "theorem2_2")]
    Theorem2_2,
    #[serde(rename = "prop2_5")]
    Prop2_5,
    #[serde(rename = "prop4_2")]
    Prop4_2,
    #[serde(rename = "prop4_3")]
    Prop4_3,
    #[serde(rename = "theorem5_1")]
    Theorem5_1,
    #[serde(rename = "section6_compare")]
    Section6Compare,
    #[serde(rename = "stormer")]
    Stormer,
    #[serde(rename = "ckl_grid")]
    CklGrid,
    #[serde(rename = "measures")]
    Measures,
}

impl SuiteName {
    pub const ALL: [SuiteName; 9] = [
        SuiteName::Theorem2_2,
        SuiteName::Prop2_5,
        SuiteName::Prop4_2,
        SuiteName::Prop4_3,
        SuiteName::Theorem5_1,
        SuiteName::Section6Compare,
        SuiteName::Stormer,
        SuiteName::CklGrid,
        SuiteName::Measures,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::Theorem2_2 => "theorem2_2",
            SuiteName::Prop2_5 => "prop2_5",
            SuiteName::Prop4_2 => "prop4_2",
            SuiteName::Prop4_3 => "prop4_3",
            SuiteName::Theorem5_1 => "theorem5_1",
            SuiteName::Section6Compare => "section6_compare",
            SuiteName::Stormer => "stormer",
            SuiteName::CklGrid => "ckl_grid",
            SuiteName::Measures => "measures",
        }
    }

    pub fn is_experimental(&self) -> bool {
        matches!(self, SuiteName::Section6Compare)
    }

    /// Instance count used when the config does not give one.
    pub fn default_count(&self) -> usize {
        match self {
            SuiteName::Theorem2_2 | SuiteName::Prop2_5 | SuiteName::Stormer => 200,
            SuiteName::Prop4_2 | SuiteName::Prop4_3 => 100,
            SuiteName::Theorem5_1 => 1000,
            SuiteName::Section6Compare => 4,
            SuiteName::CklGrid => 20,
            SuiteName::Measures => 20,
        }
    }

    fn tag(&self) -> u64 {
        Self::ALL.iter().position(|s| s == self).expect("listed") as u64 + 1
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::BadConfig(format!("unknown suite `{s}`")))
    }
}

/// Parses `dAxdB`.
pub fn parse_dims(s: &str) -> Result<FactorSplit> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::BadConfig(format!("dimensions `{s}` are not of the form dAxdB")))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::BadConfig(format!("bad dimension `{a}` in `{s}`")))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::BadConfig(format!("bad dimension `{b}` in `{s}`")))?;
    FactorSplit::new(a, b).map_err(|e| Error::BadConfig(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: SuiteName,
    #[serde(default)]
    pub count: Option<usize>,
    /// `"dAxdB"` strings; suites that are not bipartite ignore them.
    #[serde(default)]
    pub dims: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SuiteConfig {
    pub fn new(name: SuiteName) -> Self {
        Self {
            name,
            count: None,
            dims: None,
            seed: None,
        }
    }

    pub fn with_count(mut self, n: usize) -> Self {
        self.count = Some(n);
        self
    }

    fn splits(&self, default: &[(usize, usize)]) -> Result<Vec<FactorSplit>> {
        match &self.dims {
            Some(list) if !list.is_empty() => list.iter().map(|s| parse_dims(s)).collect(),
            _ => default
                .iter()
                .map(|&(a, b)| FactorSplit::new(a, b))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub seed: u64,
    pub suites: Vec<SuiteConfig>,
}

impl BatchConfig {
    /// Every suite at its default size.
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            suites: SuiteName::ALL
                .iter()
                .map(|&n| SuiteConfig::new(n))
                .collect(),
        }
    }

    /// Every suite at a small size, for smoke runs.
    pub fn quick(seed: u64) -> Self {
        let suites = SuiteName::ALL
            .iter()
            .map(|&n| {
                let c = match n {
                    SuiteName::Theorem5_1 => 50,
                    SuiteName::CklGrid => 5,
                    SuiteName::Measures => 2,
                    SuiteName::Section6Compare => 2,
                    _ => 10,
                };
                SuiteConfig::new(n).with_count(c)
            })
            .collect();
        Self { seed, suites }
    }
}

const ALL_SPLITS: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

fn record(suite: SuiteName, name: impl Into<String>, ok: bool) -> CheckRecord {
    let r = CheckRecord::new(suite.as_str(), name, Status::from_bool(ok));
    if suite.is_experimental() {
        r.experimental()
    } else {
        r
    }
}

fn seed_for(seed: u64, split: FactorSplit) -> u64 {
    rng::derive_seed(seed, (split.d_a * 16 + split.d_b) as u64)
}

pub fn run_suite(cfg: &SuiteConfig, master_seed: u64) -> Result<Vec<CheckRecord>> {
    let seed = cfg
        .seed
        .unwrap_or_else(|| rng::derive_seed(master_seed, cfg.name.tag()));
    let count = cfg.count.unwrap_or_else(|| cfg.name.default_count());
    match cfg.name {
        SuiteName::Theorem2_2 => theorem2_2(&cfg.splits(&ALL_SPLITS)?, count, seed),
        SuiteName::Prop2_5 => prop2_5(&cfg.splits(&ALL_SPLITS)?, count, seed),
        SuiteName::Prop4_2 => prop4_2(count, seed),
        SuiteName::Prop4_3 => prop4_3(count, seed),
        SuiteName::Theorem5_1 => theorem5_1(&cfg.splits(&ALL_SPLITS)?, count, seed),
        SuiteName::Section6Compare => {
            section6_compare(&cfg.splits(&[(2, 2), (3, 3)])?, count, seed)
        }
        SuiteName::Stormer => stormer(count, seed),
        SuiteName::CklGrid => ckl_grid(count, seed),
        SuiteName::Measures => measures(&cfg.splits(&[(2, 2), (2, 3), (3, 3)])?, count, seed),
    }
}

pub fn run_batch(cfg: &BatchConfig) -> Result<RunReport> {
    if cfg.suites.is_empty() {
        return Err(Error::BadConfig("no suites listed".into()));
    }
    let mut checks = Vec::new();
    for s in &cfg.suites {
        log::info!("suite {}", s.name.as_str());
        checks.extend(run_suite(s, cfg.seed)?);
    }
    Ok(RunReport::new(
        cfg.seed,
        cfg.suites
            .iter()
            .map(|s| s.name.as_str().to_string())
            .collect(),
        checks,
    ))
}

/// Representation identities on random states, plus the worked examples of
/// product, maximally entangled and general pure states.
pub fn theorem2_2(splits: &[FactorSplit], count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Theorem2_2;
    let mut out = Vec::new();
    for &split in splits {
        let s_seed = seed_for(seed, split);
        let reps = (0..count)
            .into_par_iter()
            .map(|i| {
                let st = random_state(
                    split,
                    1 + i % split.dim(),
                    rng::derive_seed(s_seed, 2 * i as u64),
                )?;
                verify_representation(&st, 8, rng::derive_seed(s_seed, 2 * i as u64 + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let fold = |f: fn(&crate::entangling::RepresentationReport) -> f64| {
            reps.iter().map(f).fold(0.0, f64::max)
        };
        let theorem = fold(|r| r.theorem_residual);
        let phi_star = fold(|r| r.phi_star_residual);
        let phi = fold(|r| r.phi_residual);
        let closed = fold(|r| r.closed_form_distance);
        let worst = theorem.max(phi_star).max(phi);
        out.push(
            record(
                suite,
                format!("representation[{split}]"),
                worst <= 1e-9 && closed <= 1e-9,
            )
            .metric("states", count)
            .metric("max_theorem_residual", theorem)
            .metric("max_phi_star_residual", phi_star)
            .metric("max_phi_residual", phi)
            .metric("max_closed_form_distance", closed),
        );
    }

    let mut r = rng::seeded(rng::derive_seed(seed, 1001));
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let split = FactorSplit::new(2 + i % 2, 2 + (i / 2) % 2)?;
        let x = rng::random_unit_vector(&mut r, split.d_a);
        let y = rng::random_unit_vector(&mut r, split.d_b);
        let st = BipartiteState::pure(split, &vector::kron(&x, &y))?;
        let ps = EntanglingOperator::new(&st)?.phi_star();
        let a = rng::ginibre(&mut r, split.d_a, split.d_a);
        let want = CMat::outer(&y, &y).scale(vector::dot(&x, &a.matvec(&x)));
        worst = worst.max(ps.apply(&a)?.max_abs_diff(&want));
    }
    out.push(record(suite, "pure_product_image", worst <= 1e-12).metric("max_entry_error", worst));

    let (m1, m2) = qutrit_pair_maps()?;
    let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let a = rng::ginibre(&mut r, 3, 3);
        e2 = e2.max(
            m2.map
                .apply(&a)?
                .max_abs_diff(&a.transpose().scale_re(1.0 / 3.0)),
        );
        e1 = e1.max(m1.map.apply(&a)?.max_abs_diff(&qutrit_x1_image(&a)));
    }
    out.push(record(suite, "qutrit_x2_transpose", e2 <= 1e-12).metric("max_entry_error", e2));
    out.push(record(suite, "qutrit_x1_pattern", e1 <= 1e-12).metric("max_entry_error", e1));

    let (mut max_dev, mut max_value, mut failures): (f64, f64, usize) = (0.0, f64::NEG_INFINITY, 0);
    for i in 0..100 {
        let split = FactorSplit::new(2 + i % 2, 2 + (i / 2) % 2)?;
        let x = rng::random_unit_vector(&mut r, split.dim());
        match cp_violation_witness_pure(split, &x) {
            Ok(w) => {
                max_dev = max_dev.max((w.value - w.predicted).abs());
                max_value = max_value.max(w.value);
            }
            Err(_) => failures += 1,
        }
    }
    out.push(
        record(
            suite,
            "pure_state_witness",
            failures == 0 && max_value < 0.0 && max_dev <= 1e-10,
        )
        .metric("states", 100usize)
        .metric("max_value", max_value)
        .metric("max_deviation_from_prediction", max_dev)
        .metric("failures", failures),
    );
    Ok(out)
}

fn ensemble_member(split: FactorSplit, i: usize, seed: u64) -> Result<BipartiteState> {
    let s = rng::derive_seed(seed, i as u64);
    match i % 4 {
        0 => random_state(split, split.dim(), s),
        1 => random_state(split, 1 + i % 3, s),
        2 => Ok(random_separable(split, 1 + i % (split.dim() + 1), s)?.state),
        _ => {
            let mut r = rng::seeded(s);
            let p: f64 = rand::Rng::random_range(&mut r, 0.0..1.0);
            let d = split.d_a.min(split.d_b);
            if split.d_a == split.d_b {
                isotropic(d, p)
            } else {
                let noise = random_state(split, split.dim(), s ^ 0x5bd1_e995)?;
                let pure = random_state(split, 1, s ^ 0x1b87_3593)?;
                BipartiteState::new(
                    split,
                    &pure.rho().scale_re(p) + &noise.rho().scale_re(1.0 - p),
                )
            }
        }
    }
}

/// `φ*` is CP exactly for PPT states and always co-CP; the isotropic PPT
/// boundary is located by bisection.
pub fn prop2_5(splits: &[FactorSplit], count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Prop2_5;
    let mut out = Vec::new();
    for &split in splits {
        let s_seed = seed_for(seed, split);
        let rows = (0..count)
            .into_par_iter()
            .map(|i| {
                let st = ensemble_member(split, i, s_seed)?;
                let ppt = is_ppt(&st);
                let v = classify_cp(&EntanglingOperator::new(&st)?.phi_star())?;
                Ok((ppt.is_ppt, v.cp, v.co_cp))
            })
            .collect::<Result<Vec<_>>>()?;
        let mismatches = rows.iter().filter(|(p, c, _)| p != c).count();
        let co_cp_failures = rows.iter().filter(|(_, _, co)| !co).count();
        let ppt_count = rows.iter().filter(|(p, _, _)| *p).count();
        out.push(
            record(
                suite,
                format!("cp_iff_ppt[{split}]"),
                mismatches == 0 && co_cp_failures == 0,
            )
            .metric("states", count)
            .metric("ppt_states", ppt_count)
            .metric("mismatches", mismatches)
            .metric("co_cp_failures", co_cp_failures),
        );
    }
    for d in [2usize, 3] {
        let f = |p: f64| -> Result<f64> { Ok(is_ppt(&isotropic(d, p)?).min_eig) };
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p_star = 0.5 * (lo + hi);
        let expected = 1.0 / (d as f64 + 1.0);
        let cp_below =
            classify_cp(&EntanglingOperator::new(&isotropic(d, p_star - 1e-4)?)?.phi_star())?.cp;
        let cp_above =
            classify_cp(&EntanglingOperator::new(&isotropic(d, p_star + 1e-4)?)?.phi_star())?.cp;
        out.push(
            record(
                suite,
                format!("isotropic_boundary[d={d}]"),
                (p_star - expected).abs() <= 1e-6 && cp_below && !cp_above,
            )
            .metric("p_star", p_star)
            .metric("expected", expected)
            .metric("cp_below", cp_below)
            .metric("cp_above", cp_above),
        );
    }
    Ok(out)
}

fn faithful_density(d: usize, seed: u64) -> CMat {
    rng::random_density_matrix(&mut rng::seeded(seed), d, d)
}

/// Transposition structure of the standard form on single systems of side 2 to 5.
pub fn prop4_2(count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Prop4_2;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let d = 2 + i % 4;
            let sf = standard_form(&faithful_density(d, rng::derive_seed(seed, 3 * i as u64)))?;
            let t =
                verify_transposition_structure(&sf, 10, rng::derive_seed(seed, 3 * i as u64 + 1))?;
            let inv = check_standard_form(&sf, 10, rng::derive_seed(seed, 3 * i as u64 + 2));
            Ok((t.conjugation_residual, t.polar_residual, inv.max_residual()))
        })
        .collect::<Result<Vec<_>>>()?;
    let conj = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let polar = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let inv = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(vec![
        record(
            suite,
            "transposition_structure",
            conj <= TOMITA_TOL && polar <= TOMITA_TOL,
        )
        .metric("instances", count)
        .metric("max_conjugation_residual", conj)
        .metric("max_polar_residual", polar),
        record(suite, "standard_form_invariants", inv <= TOMITA_TOL).metric("max_residual", inv),
    ])
}

/// `ω_{Uξ}(a) = ω_ξ(aᵗ)` for `ξ` in the natural cone, and `ω_ξ = Tr(σ·)` for `ξ = σ^{1/2}`.
pub fn prop4_3(count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Prop4_3;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let d = 2 + i % 4;
            let sf = standard_form(&faithful_density(d, rng::derive_seed(seed, 3 * i as u64)))?;
            let sigma = faithful_density(d, rng::derive_seed(seed, 3 * i as u64 + 1));
            let xi = cone_representative(&sigma)?;
            let uxi = transpose_cone_vector(&xi, &sf);
            let mut r = rng::seeded(rng::derive_seed(seed, 3 * i as u64 + 2));
            let (mut t_res, mut rep_res): (f64, f64) = (0.0, 0.0);
            for _ in 0..10 {
                let a = rng::ginibre(&mut r, d, d);
                let lhs = uxi.adjoint().matmul(&a).matmul(&uxi).trace();
                let rhs = sigma.matmul(&sf.transpose_op(&a)).trace();
                t_res = t_res.max((lhs - rhs).norm() / a.frobenius_norm());
                let w = xi.adjoint().matmul(&a).matmul(&xi).trace();
                rep_res = rep_res.max((w - sigma.matmul(&a).trace()).norm() / a.frobenius_norm());
            }
            let in_cone = min_eig(&uxi.hermitian_part())? >= -1e-12 && uxi.is_hermitian(1e-12);
            Ok((t_res, rep_res, in_cone))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let rep = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let outside = rows.iter().filter(|r| !r.2).count();
    Ok(vec![
        record(
            suite,
            "transposed_vector_state",
            t <= TOMITA_TOL && outside == 0,
        )
        .metric("instances", count)
        .metric("max_residual", t)
        .metric("transposed_outside_cone", outside),
        record(suite, "cone_representative", rep <= TOMITA_TOL).metric("max_residual", rep),
    ])
}

fn random_weights(r: &mut rng::WorkbenchRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| 0.05 + rand::Rng::random_range(r, 0.0..1.0))
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Two-form cone membership, separable vectors inside both cones, and the
/// tensor factorization of the modular objects.
pub fn theorem5_1(splits: &[FactorSplit], count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Theorem5_1;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let split = splits[i % splits.len()];
            let n = split.dim();
            let mut r = rng::seeded(rng::derive_seed(seed, i as u64));
            let ctx = ConeContext::diagonal(
                &random_weights(&mut r, split.d_a),
                &random_weights(&mut r, split.d_b),
            )?;
            let w = rng::wishart(&mut r, n, 1 + i % n);
            let a = (&w.scale_re(1.0 / w.trace().re)
                + &CMat::identity(n).scale_re(0.01 * (i % 7) as f64))
                .hermitian_part();
            let m = cone_membership(&ctx.cone_vector_of_operator(&a)?, &ctx)?;
            Ok((m.forms_agree, m.in_intersection))
        })
        .collect::<Result<Vec<_>>>()?;
    let disagreements = rows.iter().filter(|r| !r.0).count();
    let inside = rows.iter().filter(|r| r.1).count();

    let mut r = rng::seeded(rng::derive_seed(seed, u64::MAX));
    let mut sep_outside = 0;
    let mut fact_res: f64 = 0.0;
    let sep_count = (count / 10).max(1);
    for i in 0..sep_count {
        let split = splits[i % splits.len()];
        let ctx = ConeContext::diagonal(
            &random_weights(&mut r, split.d_a),
            &random_weights(&mut r, split.d_b),
        )?;
        let mut x = CMat::zeros(split.dim(), split.dim());
        for _ in 0..3 {
            x += &tensor_product(
                &rng::wishart(&mut r, split.d_a, 1),
                &rng::wishart(&mut r, split.d_b, 2),
            );
        }
        if !cone_membership(&ConeVector::new(split, x)?, &ctx)?.in_intersection {
            sep_outside += 1;
        }
        let sa = standard_form(&ctx.rho_a())?;
        let sb = standard_form(&ctx.rho_b())?;
        let xa = rng::ginibre(&mut r, split.d_a, split.d_a);
        let xb = rng::ginibre(&mut r, split.d_b, split.d_b);
        let x = tensor_product(&xa, &xb);
        let scale = x.frobenius_norm();
        let d_res = ctx
            .delta_power(&x, 1.0)
            .distance(&tensor_product(&sa.delta(&xa), &sb.delta(&xb)));
        let j_res = ctx
            .j_modular(&x)
            .distance(&tensor_product(&sa.j_modular(&xa), &sb.j_modular(&xb)));
        let dnorm = tensor_product(&sa.delta(&xa), &sb.delta(&xb))
            .frobenius_norm()
            .max(scale);
        fact_res = fact_res.max(d_res / dnorm).max(j_res / scale);
    }
    Ok(vec![
        record(suite, "two_form_membership", disagreements == 0)
            .metric("instances", count)
            .metric("disagreements", disagreements)
            .metric("in_intersection", inside),
        record(suite, "separable_vectors_in_both_cones", sep_outside == 0)
            .metric("instances", sep_count)
            .metric("outside", sep_outside),
        record(suite, "modular_factorization", fact_res <= 1e-12)
            .metric("max_relative_residual", fact_res),
    ])
}

/// Experimental: density, map and cone descriptions side by side.
pub fn section6_compare(
    splits: &[FactorSplit],
    count: usize,
    seed: u64,
) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Section6Compare;
    let mut out = Vec::new();
    let s22 = FactorSplit::new(2, 2)?;
    let v00 = vector::basis(4, 0);
    let vpp = vec![C64::new(0.5, 0.0); 4];
    let desk = BipartiteState::new(
        s22,
        (&CMat::outer(&v00, &v00) + &CMat::outer(&vpp, &vpp)).scale_re(0.5),
    )?;
    let mut cases: Vec<(String, BipartiteState, bool)> =
        vec![("separable_00_pp[2x2]".into(), desk, false)];
    for &split in splits {
        let s = seed_for(seed, split);
        let mut r = rng::seeded(s);
        let a = rng::random_density_matrix(&mut r, split.d_a, split.d_a);
        let b = rng::random_density_matrix(&mut r, split.d_b, split.d_b);
        cases.push((
            format!("product[{split}]"),
            BipartiteState::product(&a, &b)?,
            true,
        ));
        if split.d_a == split.d_b {
            cases.push((
                format!("maximally_entangled[{split}]"),
                isotropic(split.d_a, 1.0)?,
                false,
            ));
            let p = 1.0 / (split.d_a as f64 + 1.0);
            cases.push((
                format!("isotropic_boundary[{split}]"),
                isotropic(split.d_a, p * 0.99)?,
                false,
            ));
        }
        for i in 0..count {
            cases.push((
                format!("random_separable_{i}[{split}]"),
                random_separable(split, 2 + i % 3, rng::derive_seed(s, i as u64 + 1))?.state,
                false,
            ));
        }
    }
    for (k, (name, st, product)) in cases.into_iter().enumerate() {
        let split = st.split();
        let ctx = ConeContext::maximally_mixed(split);
        let rec = compare_characterizations(&st, &ctx, 5, rng::derive_seed(seed, 5000 + k as u64))?;
        let ok = rec.density_ppt == rec.map_cp_and_cocp && (!product || rec.eq_u_residual <= 1e-10);
        out.push(
            record(suite, name, ok)
                .metric("density_ppt", rec.density_ppt)
                .metric("density_min_eig", rec.density_min_eig)
                .metric("map_cp_and_cocp", rec.map_cp_and_cocp)
                .metric("sqrt_in_intersection", rec.sqrt_vector.in_intersection)
                .metric("sqrt_min_eig_gamma", rec.sqrt_vector.min_eig_x_gamma)
                .metric(
                    "operator_in_intersection",
                    rec.operator_vector.in_intersection,
                )
                .metric(
                    "operator_min_eig_gamma",
                    rec.operator_vector.min_eig_x_gamma,
                )
                .metric("eq_u_residual", rec.eq_u_residual)
                .metric(
                    "reduced_representative_trace",
                    rec.reduced_representative_trace,
                ),
        );
    }
    Ok(out)
}

fn random_contraction_scaled(r: &mut rng::WorkbenchRng, d: usize, norm: f64) -> Result<CMat> {
    let g = rng::ginibre(r, d, d);
    Ok(g.scale_re(norm / operator_norm(&g)?))
}

/// Maps `Σ V·V* + Σ (W·W*)ᵗ` applied blockwise to Størmer blocks stay PSD.
fn completeness_instance(r: &mut rng::WorkbenchRng, d: usize, seed: u64) -> Result<f64> {
    let p = random_normal_pair(d, seed);
    let x = p.block_matrix();
    let out_d = 2;
    let mut ops = Vec::new();
    for _ in 0..2 {
        ops.push(rng::ginibre(r, out_d, d));
    }
    let cp = LinearMap::from_kraus(&ops)?;
    let co = LinearMap::from_kraus(&[rng::ginibre(r, out_d, d), rng::ginibre(r, out_d, d)])?
        .then_transpose();
    let m = cp.add(&co)?;
    let mut big = CMat::zeros(2 * out_d, 2 * out_d);
    for i in 0..2 {
        for j in 0..2 {
            let blk = CMat::from_fn(d, d, |a, b| x[(i * d + a, j * d + b)]);
            let img = m.apply(&blk)?;
            for a in 0..out_d {
                for b in 0..out_d {
                    big[(i * out_d + a, j * out_d + b)] = img[(a, b)];
                }
            }
        }
    }
    let h = big.hermitian_part();
    Ok(min_eig(&h)? / operator_norm(&h)?.max(1e-300))
}

/// Størmer condition, canonical decompositions, Zhan's criterion and the
/// completeness of the block test for decomposable maps.
pub fn stormer(count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Stormer;
    let normal = (0..count)
        .into_par_iter()
        .map(|i| {
            let p = random_normal_pair(2 + i % 3, rng::derive_seed(seed, i as u64));
            let holds = stormer_condition(&p)?.holds();
            let dec = canonical_decomposition(&p)?;
            let res = dec
                .a2_residual
                .max(dec.block_residual)
                .max(dec.separable_residual);
            let gap = hyponormality_gap(&p, 100, rng::derive_seed(seed, 10_000 + i as u64))?;
            Ok((holds, res, gap / (1.0 + operator_norm(&dec.n)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let cond_fail = normal.iter().filter(|r| !r.0).count();
    let rec_res = normal.iter().map(|r| r.1).fold(0.0, f64::max);
    let hypo = normal.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);

    let non_normal = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::seeded(rng::derive_seed(seed, 20_000 + i as u64));
            let d = 2 + i % 3;
            let a1 = rng::ginibre(&mut r, d, d);
            let n = rng::ginibre(&mut r, d, d);
            let p = StormerPair::new(a1.clone(), n.matmul(&a1))?;
            Ok(stormer_condition(&p)?.min_eig_transposed)
        })
        .collect::<Result<Vec<_>>>()?;
    let not_failing = non_normal.iter().filter(|&&m| m >= -1e-8).count();
    let worst_non_normal = non_normal.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let triples = 5 * count;
    let zhan = (0..triples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::seeded(rng::derive_seed(seed, 40_000 + i as u64));
            let d = 2 + i % 3;
            let a = rng::wishart(&mut r, d, d);
            let c = rng::wishart(&mut r, d, d);
            let b = if i % 4 == 3 {
                rng::ginibre(&mut r, d, d)
            } else {
                let t: f64 = rand::Rng::random_range(&mut r, 0.05..0.45);
                let norm = if i % 2 == 0 { 1.0 - t } else { 1.0 + t };
                let w = random_contraction_scaled(&mut r, d, norm)?;
                frac_power(&a, 0.5)?
                    .matmul(&w)
                    .matmul(&frac_power(&c, 0.5)?)
            };
            let z = zhan_factor(&a, &b, &c)?;
            Ok((z.verdicts_agree, z.block_psd))
        })
        .collect::<Result<Vec<_>>>()?;
    let zhan_dis = zhan.iter().filter(|z| !z.0).count();
    let zhan_psd = zhan.iter().filter(|z| z.1).count();

    let mut r = rng::seeded(rng::derive_seed(seed, 60_000));
    let mut worst_complete = f64::INFINITY;
    for i in 0..5 * count {
        let v =
            completeness_instance(&mut r, 2 + i % 2, rng::derive_seed(seed, 70_000 + i as u64))?;
        worst_complete = worst_complete.min(v);
    }
    let resplit = resplit_experiment(
        &random_normal_pair(3, rng::derive_seed(seed, 80_000)),
        20,
        seed,
    )?;

    Ok(vec![
        record(
            suite,
            "normal_pairs",
            cond_fail == 0 && rec_res <= RECONSTRUCTION_TOL && hypo <= 1e-9,
        )
        .metric("pairs", count)
        .metric("condition_failures", cond_fail)
        .metric("max_reconstruction_residual", rec_res)
        .metric("max_hyponormality_gap", hypo),
        record(suite, "non_normal_pairs_fail", not_failing == 0)
            .metric("pairs", count)
            .metric("not_failing", not_failing)
            .metric("max_transposed_min_eig", worst_non_normal),
        record(suite, "zhan_equivalence", zhan_dis == 0)
            .metric("triples", triples)
            .metric("disagreements", zhan_dis)
            .metric("block_psd", zhan_psd),
        record(suite, "block_test_completeness", worst_complete >= -1e-10)
            .metric("instances", 5 * count)
            .metric("min_relative_eig", worst_complete),
        record(suite, "resplit_experiment", true)
            .experimental()
            .metric("summands_checked", resplit.summands_checked)
            .metric("summands_failing", resplit.summands_failing),
    ])
}

fn validate_certificate(m: &LinearMap, witness: &CMat, value: f64) -> Result<bool> {
    let split = FactorSplit::new(m.d_in(), m.d_out())?;
    let psd = min_eig(&witness.hermitian_part())? >= -1e-12;
    let ppt =
        min_eig(&partial_transpose(witness, split, Subsystem::B)?.hermitian_part())? >= -1e-12;
    let tr = (witness.trace().re - 1.0).abs() <= 1e-9;
    let recomputed = m.choi().hs_inner(witness).re;
    Ok(psd && ppt && tr && (recomputed - value).abs() <= 1e-9 && value < -1e-6)
}

/// CKL classification grid plus decomposability, certificates and the functional.
/// `count` is the number of grid values per axis (`i/5`, `i < count`).
pub fn ckl_grid(count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::CklGrid;
    let values: Vec<f64> = (0..count).map(|i| i as f64 / 5.0).collect();
    let g = cklmaps::ckl_grid(&values, seed)?;
    let mut out = vec![
        record(suite, "cp_grid", g.cp_disagreements.is_empty())
            .metric("points", g.points)
            .metric("excluded", g.excluded_cp)
            .metric("disagreements", g.cp_disagreements.len()),
        record(suite, "positivity_grid", g.positivity_exceptions.is_empty())
            .metric("points", g.points)
            .metric("excluded", g.excluded_positive)
            .metric("exceptions", g.positivity_exceptions.len()),
    ];
    let region: Vec<CklParams> = g
        .records
        .iter()
        .filter(|r| {
            r.analytic.decomposable && !r.analytic.cp && r.margins.decomposable >= BOUNDARY_BAND
        })
        .map(|r| r.params)
        .collect();
    let res = region
        .par_iter()
        .map(|p| {
            Ok(
                match is_decomposable(&cklmaps::ckl_map(*p), DecompOptions::default())? {
                    Decomposability::Feasible { residual, .. } => residual,
                    _ => f64::INFINITY,
                },
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = res.iter().copied().fold(0.0, f64::max);
    let not_feasible = res.iter().filter(|v| !v.is_finite()).count();
    out.push(
        record(suite, "decomposable_region_feasible", worst <= 1e-7)
            .metric("points", region.len())
            .metric("not_feasible", not_feasible)
            .metric("max_residual", if worst.is_finite() { worst } else { -1.0 }),
    );
    for mu in [1.0, 1.5, 2.0] {
        let m = cklmaps::ckl_map(CklParams::new(2.0, 0.0, mu)?);
        let (ok, value, label) = match is_decomposable(&m, DecompOptions::default())? {
            Decomposability::Certificate { witness, value } => (
                validate_certificate(&m, &witness, value)?,
                value,
                "certificate",
            ),
            other => (false, f64::NAN, other.label()),
        };
        out.push(
            record(suite, format!("certificate[2,0,{mu}]"), ok)
                .metric("outcome", label)
                .metric("pairing_value", value),
        );
    }
    let w = cklmaps::ckl_functional(CklParams::new(2.0, 0.0, 1.0)?).witness_search(10_000, seed)?;
    out.push(
        record(
            suite,
            "functional[2,0,1]",
            w.projective_min_sampled >= -1e-10 && w.value < 0.0,
        )
        .metric("product_samples", w.product_samples)
        .metric("projective_min_sampled", w.projective_min_sampled)
        .metric("seed_value", w.seed_value)
        .metric("injective_value", w.value),
    );
    let mut r = rng::seeded(rng::derive_seed(seed, 99));
    let mut lin: f64 = 0.0;
    for _ in 0..20 {
        let p = CklParams::new(
            rand::Rng::random_range(&mut r, 0.0..4.0),
            rand::Rng::random_range(&mut r, 0.0..4.0),
            rand::Rng::random_range(&mut r, 0.0..4.0),
        )?;
        let el: Vec<(CMat, CMat)> = (0..3)
            .map(|_| (rng::ginibre(&mut r, 3, 3), rng::ginibre(&mut r, 3, 3)))
            .collect();
        let a = cklmaps::ckl_functional(p).eval(&el)?;
        let b = pair_map_functional(&cklmaps::ckl_map(p), &el, PairingConvention::Projective)?;
        lin = lin.max((a - b).norm());
    }
    out.push(
        record(suite, "functional_matches_pairing", lin <= 1e-12).metric("max_difference", lin),
    );
    Ok(out)
}

fn rotate(split: FactorSplit, x: &CMat, seed: u64) -> CMat {
    let mut r = rng::seeded(seed);
    let u = tensor_product(
        &rng::haar_unitary(&mut r, split.d_a),
        &rng::haar_unitary(&mut r, split.d_b),
    );
    u.matmul(x).matmul(&u.adjoint())
}

/// Dykstra projections, the see-saw upper bound, closed-form regressions,
/// local-unitary invariance and the operator-norm experiment.
/// `count` is the number of Dykstra instances per split; a fifth of them
/// (at least one) also get the see-saw.
pub fn measures(splits: &[FactorSplit], count: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let suite = SuiteName::Measures;
    let dopts = DykstraOptions::default();
    let sopts = SeesawOptions::default();
    let mut out = Vec::new();
    for &split in splits {
        let s_seed = seed_for(seed, split);
        let n = split.dim();
        let rows = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::seeded(rng::derive_seed(s_seed, i as u64));
                let x = if i % 2 == 0 {
                    frac_power(&rng::random_density_matrix(&mut r, n, 1 + i % n), 0.5)?
                } else {
                    rng::random_hermitian(&mut r, n)
                };
                let xi = ConeVector::new(split, x)?;
                let d = dykstra_project(&xi, &dopts)?;
                let again = dykstra_project(&d.projection, &dopts)?;
                let drift = again.projection.x.distance(&d.projection.x);
                let upper = if i % 5 == 0 {
                    Some(d_e_upper(&xi, &sopts, rng::derive_seed(s_seed, 1000 + i as u64))?.value)
                } else {
                    None
                };
                Ok((
                    d.feasibility.0.min(d.feasibility.1),
                    drift,
                    d.converged,
                    d.kkt_gap,
                    d.distance,
                    upper,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let feas = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let drift = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let unconverged = rows.iter().filter(|r| !r.2).count();
        let kkt = rows.iter().map(|r| r.3).fold(0.0, f64::max);
        let sandwich_gap = rows
            .iter()
            .filter_map(|r| r.5.map(|u| r.4 - u))
            .fold(f64::NEG_INFINITY, f64::max);
        let with_upper = rows.iter().filter(|r| r.5.is_some()).count();
        out.push(
            record(
                suite,
                format!("dykstra[{split}]"),
                feas >= -1e-8 && drift <= 1e-9 && unconverged == 0,
            )
            .metric("instances", count)
            .metric("min_feasibility_eig", feas)
            .metric("max_idempotence_drift", drift)
            .metric("unconverged", unconverged)
            .metric("max_kkt_gap", kkt),
        );
        out.push(
            record(
                suite,
                format!("de_upper_ge_dge[{split}]"),
                sandwich_gap <= 1e-8,
            )
            .metric("instances", with_upper)
            .metric("max_dge_minus_upper", sandwich_gap),
        );
    }

    for d in [2usize, 3] {
        let split = FactorSplit::new(d, d)?;
        let xi = ConeVector::new(split, max_entangled_projector(d))?;
        let exact = ((d as f64 - 1.0) / (2.0 * d as f64)).sqrt();
        let dge = dykstra_project(&xi, &dopts)?.distance;
        let upper = d_e_upper(&xi, &sopts, rng::derive_seed(seed, 7 + d as u64))?.value;
        out.push(
            record(
                suite,
                format!("max_entangled_regression[d={d}]"),
                (dge - exact).abs() <= 1e-6 && (upper - exact).abs() <= 1e-6,
            )
            .metric("closed_form", exact)
            .metric("d_ge", dge)
            .metric("d_e_upper", upper),
        );
    }

    let mut lu_cases: Vec<(String, ConeVector)> = Vec::new();
    for d in [2usize, 3] {
        lu_cases.push((
            format!("max_entangled[d={d}]"),
            ConeVector::new(FactorSplit::new(d, d)?, max_entangled_projector(d))?,
        ));
    }
    for (k, &(a, b)) in [(2usize, 2usize), (2, 3)].iter().enumerate() {
        let split = FactorSplit::new(a, b)?;
        let rho = rng::random_density_matrix(
            &mut rng::seeded(rng::derive_seed(seed, 300 + k as u64)),
            a * b,
            2,
        );
        lu_cases.push((
            format!("random_root[{split}]"),
            ConeVector::new(split, frac_power(&rho, 0.5)?)?,
        ));
    }
    for (k, (name, xi)) in lu_cases.into_iter().enumerate() {
        let s = rng::derive_seed(seed, 400 + k as u64);
        let v0 = d_e_upper(&xi, &sopts, s)?.value;
        let rotated = ConeVector::new(xi.split, rotate(xi.split, &xi.x, s ^ 0xabcd))?;
        let v1 = d_e_upper(&rotated, &sopts, s)?.value;
        out.push(
            record(
                suite,
                format!("local_unitary_invariance[{name}]"),
                (v0 - v1).abs() <= 1e-9,
            )
            .metric("d_e_upper", v0)
            .metric("d_e_upper_rotated", v1)
            .metric("difference", (v0 - v1).abs()),
        );
    }

    for d in [2usize, 3] {
        let e = kr_opnorm_experiment(d, 50, rng::derive_seed(seed, 500 + d as u64))?;
        let closed = 1.0 / (d as f64 + 2.0);
        let ok = if d == 3 {
            e.min_opnorm_found >= 1.0 / 6.0 - 1e-6
        } else {
            e.min_opnorm_found >= closed - 1e-9
        };
        out.push(
            record(suite, format!("projector_opnorm[d={d}]"), ok)
                .metric("restarts", e.trials)
                .metric("terms", e.terms)
                .metric("min_opnorm_found", e.min_opnorm_found)
                .metric("quoted_bound", if d == 3 { 1.0 / 6.0 } else { f64::NAN })
                .metric("twirl_optimum", closed),
        );
        let s = projector_sandwich(d, &sopts, rng::derive_seed(seed, 600 + d as u64))?;
        out.push(
            record(
                suite,
                format!("projector_sandwich[d={d}]"),
                s.consistent && s.raw.lower <= s.raw.upper + 1e-8,
            )
            .metric("xi_norm", s.xi_norm)
            .metric("raw_lower", s.raw.lower)
            .metric("raw_upper", s.raw.upper)
            .metric("rescaled_lower", s.rescaled.lower)
            .metric("rescaled_upper", s.rescaled.upper)
            .metric("quoted_bound", s.quoted_bound),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
            let j = serde_json::to_string(&n).unwrap();
            assert_eq!(j, format!("\"{}\"", n.as_str()));
        }
        assert!("nope".parse::<SuiteName>().is_err());
    }

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("2x3").unwrap(), FactorSplit::new(2, 3).unwrap());
        assert!(parse_dims("23").is_err());
        assert!(parse_dims("0x3").is_err());
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let bad = r#"{"seed": 1, "suites": [{"name": "prop4_2", "cuont": 3}]}"#;
        assert!(crate::io::from_json::<BatchConfig>(bad).is_err());
        let good = r#"{"seed": 1, "suites": [{"name": "prop4_2", "count": 3}]}"#;
        let cfg: BatchConfig = crate::io::from_json(good).unwrap();
        let rep = run_batch(&cfg).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
