//! Acceptance gate: runs every suite at full size, re-checks the recorded
//! metrics against pinned tolerances and prints one line per criterion.

use std::time::{Duration, Instant};

use ppt_core::batch::{run_batch, run_suite, BatchConfig, SuiteConfig, SuiteName};
use ppt_core::io::{CheckRecord, RunReport, Status};

const SEED: u64 = 20240611;

const REPRESENTATION_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-6;
const EXAMPLE_TOL: f64 = 1e-12;
const WITNESS_TOL: f64 = 1e-10;
const TOMITA_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-8;
const IDEMPOTENCE_TOL: f64 = 1e-9;
const SANDWICH_TOL: f64 = 1e-8;
const REGRESSION_TOL: f64 = 1e-6;
const INVARIANCE_TOL: f64 = 1e-9;
const OPNORM_BOUND: f64 = 1.0 / 6.0 - 1e-6;
const STORMER_TOL: f64 = 1e-9;
const NON_NORMAL_GAP: f64 = -1e-8;
const DECOMPOSABLE_TOL: f64 = 1e-7;
const CERTIFICATE_TOL: f64 = -1e-6;

struct SuiteRun {
    checks: Vec<CheckRecord>,
    elapsed: Duration,
}

struct Verdict {
    passed: bool,
    problems: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            passed: true,
            problems: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.problems.push(what.into());
        }
    }
}

fn suite(name: SuiteName) -> SuiteRun {
    let t = Instant::now();
    let checks = run_suite(&SuiteConfig::new(name), SEED).expect("suite runs");
    SuiteRun {
        checks,
        elapsed: t.elapsed(),
    }
}

fn with_prefix<'a>(run: &'a SuiteRun, prefix: &str) -> Vec<&'a CheckRecord> {
    run.checks
        .iter()
        .filter(|c| c.name.starts_with(prefix))
        .collect()
}

fn metric(c: &CheckRecord, key: &str) -> f64 {
    c.f64_metric(key).unwrap_or(f64::NAN)
}

fn count(c: &CheckRecord, key: &str) -> u64 {
    c.metrics
        .get(key)
        .and_then(|v| v.as_u64())
        .unwrap_or(u64::MAX)
}

fn named<'a>(run: &'a SuiteRun, name: &str) -> &'a CheckRecord {
    run.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing check {name}"))
}

fn status_ok(v: &mut Verdict, c: &CheckRecord) {
    v.require(
        c.status == Status::Pass,
        format!("{} is {}", c.name, c.status.as_str()),
    );
}

fn criterion1(t22: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let reps = with_prefix(t22, "representation[");
    v.require(reps.len() == 4, "four dimension pairs");
    for c in reps {
        status_ok(&mut v, c);
        v.require(count(c, "states") == 200, format!("{} state count", c.name));
        for key in [
            "max_theorem_residual",
            "max_phi_star_residual",
            "max_phi_residual",
            "max_closed_form_distance",
        ] {
            v.require(
                metric(c, key) <= REPRESENTATION_TOL,
                format!("{} {key} = {:e}", c.name, metric(c, key)),
            );
        }
    }
    v.require(
        t22.elapsed < Duration::from_secs(120),
        format!("runtime {:?}", t22.elapsed),
    );
    v
}

fn criterion2(p25: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    for c in with_prefix(p25, "cp_iff_ppt[") {
        status_ok(&mut v, c);
        v.require(
            count(c, "mismatches") == 0 && count(c, "co_cp_failures") == 0,
            c.name.clone(),
        );
    }
    for d in [2.0, 3.0] {
        let c = named(p25, &format!("isotropic_boundary[d={d}]"));
        status_ok(&mut v, c);
        let err = (metric(c, "p_star") - 1.0 / (d + 1.0)).abs();
        v.require(
            err <= BOUNDARY_TOL,
            format!("d={d}: boundary off by {err:e}"),
        );
    }
    v
}

fn criterion3(t22: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    for name in [
        "pure_product_image",
        "qutrit_x2_transpose",
        "qutrit_x1_pattern",
    ] {
        let c = named(t22, name);
        status_ok(&mut v, c);
        v.require(
            metric(c, "max_entry_error") <= EXAMPLE_TOL,
            format!("{name} = {:e}", metric(c, "max_entry_error")),
        );
    }
    let w = named(t22, "pure_state_witness");
    status_ok(&mut v, w);
    v.require(
        count(w, "states") == 100 && count(w, "failures") == 0,
        "witness instances",
    );
    v.require(metric(w, "max_value") < 0.0, "witness strictly negative");
    v.require(
        metric(w, "max_deviation_from_prediction") <= WITNESS_TOL,
        "witness matches −2|Re λ_k conj λ_l|",
    );
    v
}

fn criterion4(p42: &SuiteRun, p43: &SuiteRun, t51: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let ts = named(p42, "transposition_structure");
    status_ok(&mut v, ts);
    v.require(count(ts, "instances") == 100, "100 instances");
    v.require(
        metric(ts, "max_conjugation_residual") <= TOMITA_TOL,
        "a^t ξ = J a* J ξ",
    );
    v.require(
        metric(ts, "max_polar_residual") <= TOMITA_TOL,
        "τ0 = U Δ^{1/2}",
    );
    let inv = named(p42, "standard_form_invariants");
    v.require(
        metric(inv, "max_residual") <= TOMITA_TOL,
        "standard form invariants",
    );
    let t = named(p43, "transposed_vector_state");
    status_ok(&mut v, t);
    v.require(
        count(t, "instances") == 100 && metric(t, "max_residual") <= TOMITA_TOL,
        "transposed vector state",
    );
    v.require(
        metric(named(p43, "cone_representative"), "max_residual") <= TOMITA_TOL,
        "cone representative",
    );
    let m = named(t51, "two_form_membership");
    status_ok(&mut v, m);
    v.require(
        count(m, "instances") == 1000 && count(m, "disagreements") == 0,
        "two-form equivalence",
    );
    v
}

fn criterion5(ms: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let dyk = with_prefix(ms, "dykstra[");
    v.require(!dyk.is_empty(), "dykstra checks present");
    for c in dyk {
        v.require(
            metric(c, "min_feasibility_eig") >= -FEASIBILITY_TOL,
            format!("{} feasibility", c.name),
        );
        v.require(
            metric(c, "max_idempotence_drift") <= IDEMPOTENCE_TOL,
            format!("{} drift", c.name),
        );
    }
    for c in with_prefix(ms, "de_upper_ge_dge[") {
        v.require(
            metric(c, "max_dge_minus_upper") <= SANDWICH_TOL,
            format!("{} ordering", c.name),
        );
    }
    for d in [2, 3] {
        let c = named(ms, &format!("max_entangled_regression[d={d}]"));
        let exact = metric(c, "closed_form");
        v.require(
            (metric(c, "d_ge") - exact).abs() <= REGRESSION_TOL,
            format!("d={d} D_ge regression"),
        );
        v.require(
            (metric(c, "d_e_upper") - exact).abs() <= REGRESSION_TOL,
            format!("d={d} D_e regression"),
        );
    }
    let lu = with_prefix(ms, "local_unitary_invariance[");
    v.require(lu.len() >= 4, "invariance cases");
    for c in lu {
        v.require(
            metric(c, "difference") <= INVARIANCE_TOL,
            format!("{} = {:e}", c.name, metric(c, "difference")),
        );
    }
    v
}

fn criterion6(ms: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let op = named(ms, "projector_opnorm[d=3]");
    v.require(
        metric(op, "min_opnorm_found") >= OPNORM_BOUND,
        format!("min found {}", metric(op, "min_opnorm_found")),
    );
    for (d, bound) in [(2, 1.0 / 8.0), (3, 1.0 / 12.0)] {
        let c = named(ms, &format!("projector_sandwich[d={d}]"));
        status_ok(&mut v, c);
        let (lo, hi) = (metric(c, "raw_lower"), metric(c, "raw_upper"));
        v.require(lo <= hi + SANDWICH_TOL, format!("d={d} sandwich ordered"));
        v.require(
            (metric(c, "quoted_bound") - bound).abs() < 1e-15,
            format!("d={d} quoted bound"),
        );
        v.require(
            metric(c, "rescaled_lower") >= bound,
            format!("d={d} consistent with the quoted bound"),
        );
    }
    v.require(
        ms.elapsed < Duration::from_secs(300),
        format!("runtime {:?}", ms.elapsed),
    );
    v
}

fn criterion7(st: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let n = named(st, "normal_pairs");
    status_ok(&mut v, n);
    v.require(
        count(n, "pairs") == 200 && count(n, "condition_failures") == 0,
        "condition holds on normal pairs",
    );
    v.require(
        metric(n, "max_reconstruction_residual") <= STORMER_TOL,
        "reconstructions",
    );
    let nn = named(st, "non_normal_pairs_fail");
    status_ok(&mut v, nn);
    v.require(
        count(nn, "pairs") == 200 && count(nn, "not_failing") == 0,
        "non-normal pairs fail",
    );
    v.require(
        metric(nn, "max_transposed_min_eig") < NON_NORMAL_GAP,
        "transposed min eig below −1e-8",
    );
    let z = named(st, "zhan_equivalence");
    status_ok(&mut v, z);
    v.require(
        count(z, "triples") == 1000 && count(z, "disagreements") == 0,
        "Zhan equivalence",
    );
    v
}

fn criterion8(ckl: &SuiteRun) -> Verdict {
    let mut v = Verdict::new();
    let cp = named(ckl, "cp_grid");
    status_ok(&mut v, cp);
    v.require(
        count(cp, "points") == 8000 && count(cp, "disagreements") == 0,
        "CP grid",
    );
    let d = named(ckl, "decomposable_region_feasible");
    status_ok(&mut v, d);
    v.require(
        count(d, "not_feasible") == 0,
        "every decomposable-region point feasible",
    );
    v.require(
        metric(d, "max_residual") <= DECOMPOSABLE_TOL,
        format!("residual {:e}", metric(d, "max_residual")),
    );
    for mu in ["1", "1.5", "2"] {
        let c = named(ckl, &format!("certificate[2,0,{mu}]"));
        status_ok(&mut v, c);
        v.require(
            metric(c, "pairing_value") < CERTIFICATE_TOL,
            format!("μ={mu} pairing {}", metric(c, "pairing_value")),
        );
    }
    let f = named(ckl, "functional[2,0,1]");
    status_ok(&mut v, f);
    v.require(count(f, "product_samples") == 10_000, "10⁴ product samples");
    v.require(
        metric(f, "projective_min_sampled") >= -1e-10,
        "nonnegative on product samples",
    );
    v.require(
        metric(f, "injective_value") < 0.0,
        "negative injective value",
    );
    v.require(
        ckl.elapsed < Duration::from_secs(600),
        format!("runtime {:?}", ckl.elapsed),
    );
    v
}

/// `first` was assembled from suites run one at a time on the global pool;
/// the second run goes through the batch driver on a three-thread pool.
fn criterion9(first: &RunReport) -> Verdict {
    let mut v = Verdict::new();
    let cfg = BatchConfig::full(SEED);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .expect("pool");
    let second: RunReport = pool.install(|| run_batch(&cfg)).expect("batch runs");
    v.require(
        first.to_json().unwrap() == second.to_json().unwrap(),
        "JSON reports differ",
    );
    v.require(
        first.to_csv().unwrap() == second.to_csv().unwrap(),
        "CSV reports differ",
    );
    v.require(
        first.passed(),
        format!("{} gating failures", first.summary.gating_failures),
    );
    v
}

#[test]
fn acceptance() {
    let t22 = suite(SuiteName::Theorem2_2);
    let p25 = suite(SuiteName::Prop2_5);
    let p42 = suite(SuiteName::Prop4_2);
    let p43 = suite(SuiteName::Prop4_3);
    let t51 = suite(SuiteName::Theorem5_1);
    let st = suite(SuiteName::Stormer);
    let ckl = suite(SuiteName::CklGrid);
    let ms = suite(SuiteName::Measures);
    let s6 = suite(SuiteName::Section6Compare);

    let ordered = [&t22, &p25, &p42, &p43, &t51, &s6, &st, &ckl, &ms];
    let assembled = RunReport::new(
        SEED,
        SuiteName::ALL
            .iter()
            .map(|n| n.as_str().to_string())
            .collect(),
        ordered
            .iter()
            .flat_map(|r| r.checks.iter().cloned())
            .collect(),
    );

    let results = [
        (
            "1",
            "representation identities on 200 states per dimension pair",
            criterion1(&t22),
        ),
        (
            "2",
            "CP(φ*) iff PPT, co-CP always, isotropic boundary",
            criterion2(&p25),
        ),
        (
            "3",
            "worked examples and pure-state witness",
            criterion3(&t22),
        ),
        (
            "4",
            "standard form, transposition and two-form cone membership",
            criterion4(&p42, &p43, &t51),
        ),
        (
            "5",
            "Dykstra projection and cone distances",
            criterion5(&ms),
        ),
        (
            "6",
            "operator-norm experiment and measure sandwich",
            criterion6(&ms),
        ),
        ("7", "Størmer pairs and Zhan's criterion", criterion7(&st)),
        (
            "8",
            "CKL grid, decomposability and functional",
            criterion8(&ckl),
        ),
        ("9", "byte-identical batch reports", criterion9(&assembled)),
    ];
    let mut failed = Vec::new();
    for (id, title, v) in &results {
        if v.passed {
            println!("PASS criterion {id}: {title}");
        } else {
            println!("FAIL criterion {id}: {title} [{}]", v.problems.join("; "));
            failed.push(*id);
        }
    }
    println!(
        "suite runtimes: theorem2_2 {:.1?}, stormer {:.1?}, ckl_grid {:.1?}, measures {:.1?}",
        t22.elapsed, st.elapsed, ckl.elapsed, ms.elapsed
    );
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
