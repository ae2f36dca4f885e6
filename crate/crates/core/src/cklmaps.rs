//! The Cho–Kye–Lee maps `φ[a,b,c] = ψ[a,b,c] − id` on `M₃`, where `ψ`
//! keeps only a circulant mixture of the diagonal.

use rayon::prelude::*;
use serde::Serialize;

use crate::mapspace::{
    classify_cp, is_decomposable, is_positive_map, pair_with_tensor, DecompOptions,
    Decomposability, LinearMap, PairingConvention, SearchBudget,
};
use crate::matcore::eig_hermitian;
use crate::rng;
use crate::states::max_entangled_projector;
use crate::{CMat, Error, Result, C64};

/// Half-width of the parameter band around each analytic boundary that is
/// excluded from hard numerical comparison.
pub const BOUNDARY_BAND: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CklParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CklParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if [a, b, c].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BadParameter(format!(
                "CKL parameters must be finite and nonnegative, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Circulant `[[a,b,c],[c,a,b],[b,c,a]]`; column `l` is `(f_1(l), f_2(l), f_3(l))`.
    pub fn coefficients(&self) -> [[f64; 3]; 3] {
        let (a, b, c) = (self.a, self.b, self.c);
        [[a, b, c], [c, a, b], [b, c, a]]
    }
}

/// `ψ[a,b,c]`: diagonal output `(a x₁₁+b x₂₂+c x₃₃, c x₁₁+a x₂₂+b x₃₃, b x₁₁+c x₂₂+a x₃₃)`.
pub fn ckl_psi(p: CklParams) -> LinearMap {
    let k = p.coefficients();
    LinearMap::from_fn(3, 3, |x| {
        CMat::from_fn(3, 3, |i, j| {
            if i == j {
                (0..3).map(|l| x[(l, l)] * k[i][l]).sum()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    })
}

/// `φ[a,b,c] = ψ[a,b,c] − id`.
pub fn ckl_map(p: CklParams) -> LinearMap {
    ckl_psi(p)
        .add(&LinearMap::identity(3).scale(-1.0))
        .expect("both maps act on M_3")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticFlags {
    pub positive: bool,
    pub cp: bool,
    pub decomposable: bool,
}

impl AnalyticFlags {
    pub fn indecomposable_positive(&self) -> bool {
        self.positive && !self.decomposable
    }
}

/// Positivity for `2 < a < 3` reduces to `a + b + c ≥ 3`.
pub fn analytic_flags(p: CklParams) -> AnalyticFlags {
    let CklParams { a, b, c } = p;
    let positive = a >= 1.0 && a + b + c >= 3.0 && (a >= 2.0 || b * c >= (2.0 - a).powi(2));
    let cp = a >= 3.0;
    let decomposable = a >= 1.0 && (a >= 3.0 || b * c >= ((3.0 - a) / 2.0).powi(2));
    AnalyticFlags {
        positive,
        cp,
        decomposable,
    }
}

/// Distances (in the defining inequalities) to each analytic boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryMargins {
    pub positive: f64,
    pub cp: f64,
    pub decomposable: f64,
}

pub fn boundary_margins(p: CklParams) -> BoundaryMargins {
    let CklParams { a, b, c } = p;
    let mut pos = (a - 1.0).abs().min((a + b + c - 3.0).abs());
    if a <= 2.0 + BOUNDARY_BAND {
        pos = pos.min((b * c - (2.0 - a).powi(2)).abs());
    }
    let mut dec = (a - 1.0).abs().min((a - 3.0).abs());
    if a <= 3.0 + BOUNDARY_BAND {
        dec = dec.min((b * c - ((3.0 - a) / 2.0).powi(2)).abs());
    }
    BoundaryMargins {
        positive: pos,
        cp: (a - 3.0).abs(),
        decomposable: dec,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericFlags {
    pub min_choi_eig: f64,
    pub cp: bool,
    /// Smallest `⟨y|φ(xx*)|y⟩` found; negative values are verified violations.
    pub positivity_value: f64,
    pub violation_found: bool,
    /// `feasible`, `certificate` or `inconclusive`.
    pub decomposability: Option<String>,
    pub decomposability_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CklClassification {
    pub params: CklParams,
    pub analytic: AnalyticFlags,
    pub margins: BoundaryMargins,
    pub numeric: NumericFlags,
    /// `None` inside the boundary band.
    pub cp_agree: Option<bool>,
    pub positive_agree: Option<bool>,
    pub decomposable_agree: Option<bool>,
}

fn within_band(m: f64) -> bool {
    m < BOUNDARY_BAND
}

fn numeric_flags(p: CklParams, decomp: Option<DecompOptions>, seed: u64) -> Result<NumericFlags> {
    let m = ckl_map(p);
    let cpv = classify_cp(&m)?;
    let pos = is_positive_map(&m, SearchBudget::default(), seed)?;
    let (decomposability, decomposability_value) = match decomp {
        None => (None, None),
        Some(opts) => {
            let d = is_decomposable(&m, opts)?;
            let v = match &d {
                Decomposability::Feasible { residual, .. } => *residual,
                Decomposability::Certificate { value, .. } => *value,
                Decomposability::Inconclusive { residual, .. } => *residual,
            };
            (Some(d.label().to_string()), Some(v))
        }
    };
    Ok(NumericFlags {
        min_choi_eig: cpv.min_choi_eig,
        cp: cpv.cp,
        positivity_value: pos.value(),
        violation_found: pos.is_violation(),
        decomposability,
        decomposability_value,
    })
}

fn assemble_classification(p: CklParams, numeric: NumericFlags) -> CklClassification {
    let analytic = analytic_flags(p);
    let margins = boundary_margins(p);
    let cp_agree = (!within_band(margins.cp)).then_some(analytic.cp == numeric.cp);
    let positive_agree =
        (!within_band(margins.positive)).then_some(analytic.positive != numeric.violation_found);
    let decomposable_agree = match numeric.decomposability.as_deref() {
        Some(label) if !within_band(margins.decomposable) && label != "inconclusive" => {
            Some(analytic.decomposable == (label == "feasible"))
        }
        _ => None,
    };
    CklClassification {
        params: p,
        analytic,
        margins,
        numeric,
        cp_agree,
        positive_agree,
        decomposable_agree,
    }
}

/// Analytic flags with a full numerical cross-check (CP, positivity, decomposability).
pub fn ckl_classify(p: CklParams, seed: u64) -> Result<CklClassification> {
    Ok(assemble_classification(
        p,
        numeric_flags(p, Some(DecompOptions::default()), seed)?,
    ))
}

/// Cross-check without the decomposability solve.
pub fn ckl_classify_fast(p: CklParams, seed: u64) -> Result<CklClassification> {
    Ok(assemble_classification(p, numeric_flags(p, None, seed)?))
}

/// `i/5` for `i = 0..20`.
pub fn grid_values() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 5.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridReport {
    pub points: usize,
    pub excluded_cp: usize,
    pub excluded_positive: usize,
    pub cp_disagreements: Vec<CklParams>,
    /// Analytic verdict and search disagree outside the band.
    pub positivity_exceptions: Vec<CklParams>,
    pub records: Vec<CklClassification>,
}

/// Fast cross-check over every `(a, b, c)` in `values³`, in parallel; records
/// keep grid order.
pub fn ckl_grid(values: &[f64], seed: u64) -> Result<GridReport> {
    let pts: Vec<CklParams> = values
        .iter()
        .flat_map(|&a| {
            values
                .iter()
                .flat_map(move |&b| values.iter().map(move |&c| CklParams { a, b, c }))
        })
        .collect();
    let records: Vec<CklClassification> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| ckl_classify_fast(*p, rng::derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    Ok(GridReport {
        points: records.len(),
        excluded_cp: records.iter().filter(|r| r.cp_agree.is_none()).count(),
        excluded_positive: records
            .iter()
            .filter(|r| r.positive_agree.is_none())
            .count(),
        cp_disagreements: records
            .iter()
            .filter(|r| r.cp_agree == Some(false))
            .map(|r| r.params)
            .collect(),
        positivity_exceptions: records
            .iter()
            .filter(|r| r.positive_agree == Some(false))
            .map(|r| r.params)
            .collect(),
        records,
    })
}

/// `ω(x⊗y) = Tr(φ[a,b,c](x)·yᵗ)` evaluated from the images of matrix units:
/// `φ(E_ij) = −E_ij` for `i ≠ j` and `φ(E_ll) = −E_ll + Σ_k f_k(l) E_kk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CklFunctional {
    pub params: CklParams,
    pub in_positive_region: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSearch {
    pub product_samples: usize,
    pub projective_min_sampled: f64,
    /// Value at the maximally entangled projector.
    pub seed_value: f64,
    /// Unit-trace PSD `W` with `ω(W) = value`.
    pub injective_witness: CMat,
    pub value: f64,
}

pub fn ckl_functional(p: CklParams) -> CklFunctional {
    CklFunctional {
        params: p,
        in_positive_region: analytic_flags(p).positive,
    }
}

impl CklFunctional {
    pub fn eval_simple(&self, x: &CMat, y: &CMat) -> Result<C64> {
        for m in [x, y] {
            if m.rows() != 3 || m.cols() != 3 {
                return Err(Error::DimensionMismatch(format!(
                    "CKL functional acts on 3x3 factors, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let k = self.params.coefficients();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc -= x[(i, j)] * y[(i, j)];
            }
        }
        for l in 0..3 {
            let diag: C64 = (0..3).map(|kk| y[(kk, kk)] * k[kk][l]).sum();
            acc += x[(l, l)] * diag;
        }
        Ok(acc)
    }

    /// Linear extension to `Σ x_i ⊗ y_i`.
    pub fn eval(&self, element: &[(CMat, CMat)]) -> Result<C64> {
        element.iter().map(|(x, y)| self.eval_simple(x, y)).sum()
    }

    /// Extension to an assembled tensor `W = Σ w_{(ik),(jl)} E_ij⊗F_kl`.
    pub fn eval_tensor(&self, w: &CMat) -> Result<C64> {
        if w.rows() != 9 || w.cols() != 9 {
            return Err(Error::DimensionMismatch(format!(
                "expected a 9x9 tensor, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let y = CMat::from_fn(3, 3, |k, l| w[(i * 3 + k, j * 3 + l)]);
                acc += self.eval_simple(&CMat::unit(3, i, j), &y)?;
            }
        }
        Ok(acc)
    }

    /// Samples `ω(a⊗b)` on random PSD products, then minimizes `ω(W)` over
    /// unit-trace PSD `W`, starting from the maximally entangled projector.
    /// The minimum is `λ_min(Choi φ)`, attained at `W = |v̄⟩⟨v̄|` for its eigenvector `v`.
    pub fn witness_search(&self, samples: usize, seed: u64) -> Result<WitnessSearch> {
        if !self.in_positive_region {
            return Err(Error::BadParameter(format!(
                "({}, {}, {}) lies outside the positive region",
                self.params.a, self.params.b, self.params.c
            )));
        }
        let mut r = rng::seeded(seed);
        let mut min_sampled = f64::INFINITY;
        for i in 0..samples {
            let a = rng::wishart(&mut r, 3, 1 + i % 3);
            let b = rng::wishart(&mut r, 3, 3);
            let v = self.eval_simple(&a, &b)?.re / (a.trace().re * b.trace().re);
            min_sampled = min_sampled.min(v);
        }
        let p = max_entangled_projector(3);
        let seed_value = self.eval_tensor(&p)?.re;
        let m = ckl_map(self.params);
        let e = eig_hermitian(&m.choi().hermitian_part())?;
        let v: Vec<C64> = e.vector(0).into_iter().map(|z| z.conj()).collect();
        let w = CMat::outer(&v, &v);
        let value = self.eval_tensor(&w)?.re;
        let (witness, value) = if value <= seed_value {
            (w, value)
        } else {
            (p, seed_value)
        };
        debug_assert!(
            (pair_with_tensor(&m, &witness, PairingConvention::Projective)?.re - value).abs()
                < 1e-9
        );
        Ok(WitnessSearch {
            product_samples: samples,
            projective_min_sampled: min_sampled,
            seed_value,
            injective_witness: witness,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapspace::pair_map_functional;

    fn p(a: f64, b: f64, c: f64) -> CklParams {
        CklParams::new(a, b, c).unwrap()
    }

    #[test]
    fn psi_100_is_pinching() {
        assert_eq!(ckl_psi(p(1.0, 0.0, 0.0)), LinearMap::pinching(3));
        let x = rng::ginibre(&mut rng::seeded(1), 3, 3);
        let want = &CMat::from_fn(3, 3, |i, j| {
            if i == j {
                x[(i, i)]
            } else {
                C64::new(0.0, 0.0)
            }
        }) - &x;
        assert!(
            ckl_map(p(1.0, 0.0, 0.0))
                .apply(&x)
                .unwrap()
                .max_abs_diff(&want)
                < 1e-14
        );
    }

    #[test]
    fn off_diagonal_units_flip_sign() {
        let img = ckl_map(p(2.0, 0.0, 1.0))
            .apply(&CMat::unit(3, 0, 1))
            .unwrap();
        assert_eq!(img, CMat::unit(3, 0, 1).scale_re(-1.0));
    }

    #[test]
    fn cp_boundary_at_three() {
        let v = classify_cp(&ckl_map(p(3.0, 0.0, 0.0))).unwrap();
        assert!(v.min_choi_eig.abs() < 1e-12 && v.cp);
        assert!(!classify_cp(&ckl_map(p(2.9, 0.0, 0.0))).unwrap().cp);
    }

    #[test]
    fn analytic_examples() {
        let f = analytic_flags(p(2.0, 0.0, 1.0));
        assert!(f.positive && !f.cp && !f.decomposable);
        let f = analytic_flags(p(3.0, 0.0, 0.0));
        assert!(f.cp && f.decomposable);
        let f = analytic_flags(p(1.0, 1.0, 1.0));
        assert!(f.positive && f.decomposable);
        assert!(boundary_margins(p(1.0, 1.0, 1.0)).positive < BOUNDARY_BAND);
    }

    #[test]
    fn e11_value_for_201() {
        let w = ckl_functional(p(2.0, 0.0, 1.0));
        let e11 = CMat::unit(3, 0, 0);
        assert_eq!(w.eval_simple(&e11, &e11).unwrap(), C64::new(1.0, 0.0));
        let img = ckl_map(p(2.0, 0.0, 1.0)).apply(&e11).unwrap();
        assert_eq!(img, CMat::from_real_diag(&[1.0, 1.0, 0.0]));
    }

    #[test]
    fn functional_matches_map_pairing() {
        let mut r = rng::seeded(2);
        let prm = p(1.3, 0.4, 2.2);
        let w = ckl_functional(prm);
        let m = ckl_map(prm);
        let el: Vec<(CMat, CMat)> = (0..4)
            .map(|_| (rng::ginibre(&mut r, 3, 3), rng::ginibre(&mut r, 3, 3)))
            .collect();
        let a = w.eval(&el).unwrap();
        let b = pair_map_functional(&m, &el, PairingConvention::Projective).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn witness_for_atom() {
        let s = ckl_functional(p(2.0, 0.0, 1.0))
            .witness_search(2000, 3)
            .unwrap();
        assert!(s.projective_min_sampled >= -1e-10);
        assert!((s.seed_value + 1.0).abs() < 1e-12);
        assert!(s.value < 0.0);
        assert!(ckl_functional(p(0.5, 0.0, 0.0))
            .witness_search(10, 1)
            .is_err());
    }

    #[test]
    fn fast_classification_agrees_off_boundary() {
        for prm in [
            p(2.0, 0.0, 1.0),
            p(0.6, 0.2, 0.2),
            p(2.4, 0.2, 0.2),
            p(1.4, 0.2, 1.0),
            p(3.4, 0.0, 0.0),
        ] {
            let c = ckl_classify_fast(prm, 5).unwrap();
            assert_eq!(c.cp_agree, Some(true), "{prm:?}");
            assert_ne!(c.positive_agree, Some(false), "{prm:?} {:?}", c.numeric);
        }
    }

    #[test]
    fn full_classification_of_atom() {
        let c = ckl_classify(p(2.0, 0.0, 1.0), 1).unwrap();
        assert_eq!(c.numeric.decomposability.as_deref(), Some("certificate"));
        assert_eq!(c.decomposable_agree, Some(true));
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(CklParams::new(-1.0, 0.0, 0.0).is_err());
    }
}
