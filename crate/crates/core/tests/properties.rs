use proptest::prelude::*;

use ppt_core::cklmaps::{
    analytic_flags, boundary_margins, ckl_functional, ckl_map, CklParams, BOUNDARY_BAND,
};
use ppt_core::entangling::{verify_representation, EntanglingOperator};
use ppt_core::io::{parse_matrix, to_json, MatrixJson};
use ppt_core::mapspace::{
    classify_cp, cp_criterion_check, is_decomposable, is_positive_map, pair_map_functional,
    DecompOptions, Decomposability, LinearMap, PairingConvention, SearchBudget,
};
use ppt_core::matcore::{
    eig_hermitian, frac_power, min_eig, partial_transpose, psd_project, tensor_product,
    FactorSplit, Subsystem,
};
use ppt_core::measures::{d_e_upper, dykstra_project, DykstraOptions, SeesawOptions};
use ppt_core::states::{is_ppt, is_ppt_via_a, random_separable, random_state, BipartiteState};
use ppt_core::stormer::{
    canonical_decomposition, hyponormality_gap, random_normal_pair, stormer_condition, zhan_factor,
};
use ppt_core::tomita::{
    cone_membership, cone_representative, standard_form, transpose_cone_vector,
    verify_transposition_structure, ConeContext, ConeVector,
};
use ppt_core::{rng, CMat, C64};

fn split_strategy() -> impl Strategy<Value = FactorSplit> {
    (2usize..=3, 2usize..=3).prop_map(|(a, b)| FactorSplit::new(a, b).unwrap())
}

fn positive_weights(r: &mut rng::WorkbenchRng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| 0.05 + rand::Rng::random_range(r, 0.0..1.0))
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn local_unitary(split: FactorSplit, seed: u64) -> CMat {
    let mut r = rng::seeded(seed);
    tensor_product(
        &rng::haar_unitary(&mut r, split.d_a),
        &rng::haar_unitary(&mut r, split.d_b),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn eigen_reconstruction(n in 1usize..=16, seed in any::<u64>()) {
        let m = rng::random_hermitian(&mut rng::seeded(seed), n);
        let e = eig_hermitian(&m).unwrap();
        prop_assert!(e.reconstruct().distance(&m) <= 1e-9 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn partial_transpose_is_isometric_involution(split in split_strategy(), seed in any::<u64>()) {
        let m = rng::ginibre(&mut rng::seeded(seed), split.dim(), split.dim());
        for side in [Subsystem::A, Subsystem::B] {
            let t = partial_transpose(&m, split, side).unwrap();
            prop_assert!((t.frobenius_norm() - m.frobenius_norm()).abs() <= 1e-14 * m.frobenius_norm());
            prop_assert_eq!(partial_transpose(&t, split, side).unwrap(), m.clone());
        }
    }

    #[test]
    fn psd_projection_is_nearest(n in 2usize..=6, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let m = rng::random_hermitian(&mut r, n);
        let d = m.distance(&psd_project(&m).unwrap());
        for k in 0..20 {
            let x = rng::wishart(&mut r, n, 1 + k % n);
            prop_assert!(d <= m.distance(&x) + 1e-12);
        }
    }

    #[test]
    fn fractional_powers_compose(n in 2usize..=6, seed in any::<u64>(), p in -1.0f64..2.0, q in -1.0f64..2.0) {
        let mut r = rng::seeded(seed);
        let w = rng::wishart(&mut r, n, n);
        let m = &w.scale_re(1.0 / w.trace().re) + &CMat::identity(n).scale_re(0.1);
        let lhs = frac_power(&m, p).unwrap().matmul(&frac_power(&m, q).unwrap());
        let rhs = frac_power(&m, p + q).unwrap();
        prop_assert!(lhs.distance(&rhs) <= 1e-9 * rhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn separable_states_are_ppt(split in split_strategy(), terms in 1usize..8, seed in any::<u64>()) {
        let s = random_separable(split, terms, seed).unwrap().state;
        prop_assert!(is_ppt(&s).is_ppt);
    }

    #[test]
    fn ppt_is_local_unitary_invariant(split in split_strategy(), rank in 1usize..=9, seed in any::<u64>()) {
        let s = random_state(split, rank.min(split.dim()), seed).unwrap();
        let u = local_unitary(split, seed ^ 1);
        let t = BipartiteState::new(split, u.matmul(s.rho()).matmul(&u.adjoint()).hermitian_part()).unwrap();
        let (a, b) = (is_ppt(&s), is_ppt(&t));
        prop_assert_eq!(a.is_ppt, b.is_ppt);
        prop_assert!((a.min_eig - b.min_eig).abs() <= 1e-9);
    }

    #[test]
    fn transpose_side_does_not_matter(split in split_strategy(), rank in 1usize..=9, seed in any::<u64>()) {
        let s = random_state(split, rank.min(split.dim()), seed).unwrap();
        let (b, a) = (is_ppt(&s), is_ppt_via_a(&s));
        prop_assert_eq!(a.is_ppt, b.is_ppt);
        prop_assert!((a.min_eig - b.min_eig).abs() <= 1e-12);
    }

    #[test]
    fn representation_identities(split in split_strategy(), rank in 1usize..=9, seed in any::<u64>()) {
        let s = random_state(split, rank.min(split.dim()), seed).unwrap();
        let r = verify_representation(&s, 4, seed ^ 7).unwrap();
        prop_assert!(r.theorem_residual <= 1e-9 && r.phi_star_residual <= 1e-9 && r.phi_residual <= 1e-9);
        prop_assert!(r.closed_form_distance <= 1e-9);
    }

    #[test]
    fn entanglement_map_is_co_cp_and_cp_iff_ppt(split in split_strategy(), rank in 1usize..=9, seed in any::<u64>()) {
        let s = random_state(split, rank.min(split.dim()), seed).unwrap();
        let v = classify_cp(&EntanglingOperator::new(&s).unwrap().phi_star()).unwrap();
        prop_assert!(v.co_cp);
        prop_assert_eq!(v.cp, is_ppt(&s).is_ppt);
    }

    #[test]
    fn injective_pairing_of_phi_star_is_the_state(split in split_strategy(), seed in any::<u64>()) {
        let s = random_state(split, split.dim(), seed).unwrap();
        let m = EntanglingOperator::new(&s).unwrap().phi_star();
        let mut r = rng::seeded(seed ^ 3);
        let a = rng::ginibre(&mut r, split.d_a, split.d_a);
        let b = rng::ginibre(&mut r, split.d_b, split.d_b);
        let lhs = pair_map_functional(&m, &[(a.clone(), b.clone())], PairingConvention::Injective).unwrap();
        let rhs = s.rho().matmul(&tensor_product(&a, &b)).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (a.frobenius_norm() * b.frobenius_norm()));
    }

    #[test]
    fn criterion_sampler_has_no_false_violations(din in 2usize..=3, dout in 2usize..=3, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let v1 = rng::ginibre(&mut r, dout, din);
        let v2 = rng::ginibre(&mut r, dout, din).scale_re(0.7);
        let cp = LinearMap::from_kraus(std::slice::from_ref(&v1)).unwrap();
        let neg = cp.add(&LinearMap::from_kraus(&[v2]).unwrap().scale(-1.0)).unwrap();
        for m in [cp, neg] {
            let rep = cp_criterion_check(&m, din, 10, seed).unwrap();
            if rep.violation_found {
                prop_assert!(!classify_cp(&m).unwrap().cp);
            }
        }
    }

    #[test]
    fn positive_maps_pair_nonnegatively_with_product_psd(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let a0 = rand::Rng::random_range(&mut r, 1.0..4.0);
        let b0 = rand::Rng::random_range(&mut r, 0.0..3.0);
        let c0 = rand::Rng::random_range(&mut r, 0.0..3.0);
        let p = CklParams::new(a0, b0, c0).unwrap();
        let mut maps = vec![LinearMap::identity(3), LinearMap::transposition(3)];
        if analytic_flags(p).positive {
            maps.push(ckl_map(p));
        }
        for m in &maps {
            for k in 0..50 {
                let a = rng::wishart(&mut r, 3, 1 + k % 3);
                let b = rng::wishart(&mut r, 3, 1 + (k / 3) % 3);
                let v = pair_map_functional(m, &[(a, b)], PairingConvention::Projective).unwrap();
                prop_assert!(v.re >= -1e-10);
            }
        }
    }

    #[test]
    fn ckl_functional_matches_pairing_and_is_linear(a in 0.0f64..4.0, b in 0.0f64..4.0, c in 0.0f64..4.0, seed in any::<u64>()) {
        let p = CklParams::new(a, b, c).unwrap();
        let f = ckl_functional(p);
        let mut r = rng::seeded(seed);
        let e1 = vec![(rng::ginibre(&mut r, 3, 3), rng::ginibre(&mut r, 3, 3))];
        let e2 = vec![(rng::ginibre(&mut r, 3, 3), rng::ginibre(&mut r, 3, 3))];
        let both: Vec<(CMat, CMat)> = e1.iter().chain(&e2).cloned().collect();
        let (v1, v2, v12) = (f.eval(&e1).unwrap(), f.eval(&e2).unwrap(), f.eval(&both).unwrap());
        prop_assert!((v12 - v1 - v2).norm() <= 1e-12 * (1.0 + v12.norm()));
        let direct = pair_map_functional(&ckl_map(p), &both, PairingConvention::Projective).unwrap();
        prop_assert!((v12 - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn standard_form_transposition_identities(d in 2usize..=5, seed in any::<u64>()) {
        let rho = rng::random_density_matrix(&mut rng::seeded(seed), d, d);
        let sf = standard_form(&rho).unwrap();
        let t = verify_transposition_structure(&sf, 5, seed ^ 5).unwrap();
        prop_assert!(t.conjugation_residual <= 1e-10 && t.polar_residual <= 1e-10);
        let x = rng::ginibre(&mut rng::seeded(seed ^ 9), d, d);
        let ux = sf.u(&x);
        prop_assert!((ux.frobenius_norm() - x.frobenius_norm()).abs() <= 1e-14 * x.frobenius_norm());
        prop_assert!(sf.u(&ux).distance(&x) <= 1e-14 * x.frobenius_norm());
    }

    #[test]
    fn one_u_is_isometric_involution(split in split_strategy(), seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let ctx = ConeContext::diagonal(&positive_weights(&mut r, split.d_a), &positive_weights(&mut r, split.d_b)).unwrap();
        let x = rng::ginibre(&mut r, split.dim(), split.dim());
        let y = ctx.one_u(&x);
        prop_assert!((y.frobenius_norm() - x.frobenius_norm()).abs() <= 1e-14 * x.frobenius_norm());
        prop_assert!(ctx.one_u(&y).distance(&x) <= 1e-14 * x.frobenius_norm());
    }

    #[test]
    fn transposed_cone_vector_state(d in 2usize..=5, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let sf = standard_form(&rng::random_density_matrix(&mut r, d, d)).unwrap();
        let sigma = rng::random_density_matrix(&mut r, d, 1 + (seed as usize) % d);
        let xi = cone_representative(&sigma).unwrap();
        let uxi = transpose_cone_vector(&xi, &sf);
        let a = rng::ginibre(&mut r, d, d);
        let lhs = uxi.adjoint().matmul(&a).matmul(&uxi).trace();
        let rhs = sigma.matmul(&sf.transpose_op(&a)).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn two_forms_of_cone_membership_agree(split in split_strategy(), rank in 1usize..=9, shift in 0.0f64..0.1, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let ctx = ConeContext::diagonal(&positive_weights(&mut r, split.d_a), &positive_weights(&mut r, split.d_b)).unwrap();
        let n = split.dim();
        let w = rng::wishart(&mut r, n, rank.min(n));
        let a = (&w.scale_re(1.0 / w.trace().re) + &CMat::identity(n).scale_re(shift)).hermitian_part();
        let m = cone_membership(&ctx.cone_vector_of_operator(&a).unwrap(), &ctx).unwrap();
        prop_assert!(m.forms_agree);
    }

    #[test]
    fn separable_vectors_lie_in_both_cones(split in split_strategy(), terms in 1usize..5, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let ctx = ConeContext::diagonal(&positive_weights(&mut r, split.d_a), &positive_weights(&mut r, split.d_b)).unwrap();
        let mut x = CMat::zeros(split.dim(), split.dim());
        for _ in 0..terms {
            x += &tensor_product(&rng::wishart(&mut r, split.d_a, 1), &rng::wishart(&mut r, split.d_b, 1));
        }
        prop_assert!(cone_membership(&ConeVector::new(split, x).unwrap(), &ctx).unwrap().in_intersection);
    }

    #[test]
    fn stormer_normal_pairs_decompose(d in 2usize..=4, seed in any::<u64>()) {
        let p = random_normal_pair(d, seed);
        prop_assert!(stormer_condition(&p).unwrap().holds());
        let dec = canonical_decomposition(&p).unwrap();
        prop_assert!(dec.block_residual <= 1e-9 && dec.separable_residual <= 1e-9 && dec.a2_residual <= 1e-9);
        for t in &dec.terms {
            prop_assert!(min_eig(&t.projector()).unwrap() >= -1e-12);
        }
        prop_assert!(hyponormality_gap(&p, 20, seed).unwrap() <= 1e-9);
    }

    #[test]
    fn zhan_matches_block_psd(d in 2usize..=3, scale in 0.2f64..2.0, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let a = rng::wishart(&mut r, d, d);
        let c = rng::wishart(&mut r, d, d);
        let b = rng::ginibre(&mut r, d, d).scale_re(scale);
        prop_assert!(zhan_factor(&a, &b, &c).unwrap().verdicts_agree);
    }

    #[test]
    fn matrices_round_trip_through_json(rows in 1usize..4, cols in 1usize..4, vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 18)) {
        let n = rows * cols;
        let m = CMat::new(rows, cols, (0..n).map(|k| C64::new(vals[k], vals[n + k])).collect()).unwrap();
        let text = to_json(&MatrixJson::from_matrix(&m)).unwrap();
        let back = parse_matrix(&text).unwrap();
        for (x, y) in m.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn dykstra_output_is_a_feasible_fixed_point(split in split_strategy(), seed in any::<u64>()) {
        let x = rng::random_hermitian(&mut rng::seeded(seed), split.dim());
        let opts = DykstraOptions::default();
        let d = dykstra_project(&ConeVector::new(split, x).unwrap(), &opts).unwrap();
        prop_assert!(d.feasibility.0 >= -1e-8 && d.feasibility.1 >= -1e-8);
        let again = dykstra_project(&d.projection, &opts).unwrap();
        prop_assert!(again.projection.x.distance(&d.projection.x) <= 1e-9);
    }

    #[test]
    fn dykstra_beats_random_feasible_points(seed in any::<u64>()) {
        let split = FactorSplit::new(2, 2).unwrap();
        let mut r = rng::seeded(seed);
        let x = rng::random_hermitian(&mut r, 4);
        let d = dykstra_project(&ConeVector::new(split, x.clone()).unwrap(), &DykstraOptions::default()).unwrap();
        for k in 0..200 {
            let s = random_separable(split, 1 + k % 4, rng::derive_seed(seed, k as u64)).unwrap().state;
            let t = rand::Rng::random_range(&mut r, 0.0..2.0);
            prop_assert!(d.distance <= x.distance(&s.rho().scale_re(t)) + 1e-9);
        }
    }

    #[test]
    fn dge_is_convex(split in split_strategy(), seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let x = rng::random_hermitian(&mut r, split.dim());
        let y = rng::random_hermitian(&mut r, split.dim());
        let mid = (&x + &y).scale_re(0.5);
        let opts = DykstraOptions::default();
        let f = |m: CMat| dykstra_project(&ConeVector::new(split, m).unwrap(), &opts).unwrap().distance;
        prop_assert!(f(mid) <= 0.5 * (f(x) + f(y)) + 1e-9);
    }

    #[test]
    fn separable_upper_bound_dominates_dge(seed in any::<u64>()) {
        let split = FactorSplit::new(2, 2).unwrap();
        let rho = rng::random_density_matrix(&mut rng::seeded(seed), 4, 2);
        let xi = ConeVector::new(split, frac_power(&rho, 0.5).unwrap()).unwrap();
        let dge = dykstra_project(&xi, &DykstraOptions::default()).unwrap().distance;
        let up = d_e_upper(&xi, &SeesawOptions { restarts: 4, ..Default::default() }, seed).unwrap().value;
        prop_assert!(up >= dge - 1e-8);
    }

    #[test]
    fn random_cp_maps_are_decomposable(din in 2usize..=3, dout in 2usize..=3, k in 1usize..4, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let ops: Vec<CMat> = (0..k).map(|_| rng::ginibre(&mut r, dout, din)).collect();
        match is_decomposable(&LinearMap::from_kraus(&ops).unwrap(), DecompOptions::default()).unwrap() {
            Decomposability::Feasible { residual, .. } => prop_assert!(residual <= 1e-7),
            other => prop_assert!(false, "{}", other.label()),
        }
    }

    #[test]
    fn analytic_positivity_matches_search(a in 0.0f64..4.0, b in 0.0f64..4.0, c in 0.0f64..4.0, seed in any::<u64>()) {
        let p = CklParams::new(a, b, c).unwrap();
        prop_assume!(boundary_margins(p).positive >= BOUNDARY_BAND);
        let found = is_positive_map(&ckl_map(p), SearchBudget::default(), seed).unwrap().is_violation();
        prop_assert_eq!(found, !analytic_flags(p).positive);
    }
}
