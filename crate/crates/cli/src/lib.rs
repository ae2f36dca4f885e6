//! Command-line front end for `ppt-core`. [`run`] takes the argument list
//! and output streams so it can be driven in-process.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ppt_core::batch::{parse_dims, run_batch, BatchConfig};
use ppt_core::cklmaps::{self, CklParams};
use ppt_core::entangling::EntanglingOperator;
use ppt_core::io::{self, MatrixJson, StateFile};
use ppt_core::mapspace::{
    classify_cp, is_decomposable, is_positive_map, DecompOptions, Decomposability, LinearMap,
    SearchBudget,
};
use ppt_core::matcore::FactorSplit;
use ppt_core::measures::{d_e_upper, dykstra_project, DykstraOptions, SeesawOptions};
use ppt_core::states::{self, BipartiteState};
use ppt_core::stormer::{
    canonical_decomposition, random_normal_pair, stormer_condition, StormerPair,
};
use ppt_core::tomita::{
    check_standard_form, compare_characterizations, standard_form, verify_transposition_structure,
    ConeContext, ConeVector, TOMITA_TOL,
};
use ppt_core::{rng, CMat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ppt-workbench",
    version,
    about = "PPT states, entanglement maps, cones and positive maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Bipartite dimensions `dAxdB`.
    #[arg(long, global = true)]
    pub dims: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    De,
    Dge,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    PhiStar,
    Phi,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial-transpose test of a state.
    PptCheck {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Choi matrix and CP flags of the entanglement mapping of a state.
    EntangleMap {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Direction::PhiStar)]
        direction: Direction,
    },
    /// CP, positivity and decomposability of a map given by its Choi matrix
    /// (`--dims dinxdout`).
    ClassifyMap {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Cone distances of a matrix in Hilbert-Schmidt space.
    Measure {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Størmer condition and canonical decomposition of a block pair
    /// (`{"a1": ..., "a2": ...}`); a random normal pair of side dA when no input is given.
    Stormer {
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Cho-Kye-Lee maps on M_3.
    Ckl {
        #[command(subcommand)]
        action: CklAction,
    },
    /// Standard-form and transposition identities for a faithful density.
    TomitaVerify {
        /// Single-system density as a matrix; random of side `--dim` when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Density, map and cone characterizations of one state side by side.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        probes: usize,
    },
    /// Random instances.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Runs verification suites and writes a report.
    BatchVerify {
        /// Suite configuration; every suite at default size when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Small instance counts (ignored with `--config`).
        #[arg(long)]
        quick: bool,
        /// Also write the CSV report here.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CklAction {
    Classify {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Product-sample nonnegativity and an injective-cone witness for the dual functional.
    Functional {
        a: f64,
        b: f64,
        c: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Analytic versus numeric flags on the grid `i/5`, `i < points`.
    Grid {
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Random state of the given rank (full rank by default).
    State {
        #[arg(long)]
        rank: Option<usize>,
    },
    Separable {
        #[arg(long, default_value_t = 3)]
        terms: usize,
    },
    /// `p·P + (1−p)·I/d²` on `d⊗d`.
    Isotropic {
        #[arg(long)]
        p: f64,
    },
    /// Haar-random pure state.
    Pure,
    /// Random Størmer pair with normal `a₂a₁⁻¹`, side dA.
    StormerPair,
}

/// Outcome of a subcommand: a JSON document and whether it records a violation.
struct Output {
    value: Value,
    violation: bool,
    /// Preformatted text (used by batch reports) bypassing the generic writers.
    text: Option<String>,
}

impl Output {
    fn ok(value: Value) -> Self {
        Self {
            value,
            violation: false,
            text: None,
        }
    }
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => match emit(&cli.global, &out, stdout) {
            Ok(()) => {
                if out.violation {
                    EXIT_VIOLATION
                } else {
                    EXIT_OK
                }
            }
            Err(f) => {
                let _ = writeln!(stderr, "error: {}", f.0);
                EXIT_USAGE
            }
        },
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.0);
            EXIT_USAGE
        }
    }
}

/// Applies `WORKBENCH_THREADS` (0 or unset = automatic) to the global rayon pool.
pub fn configure_threads(var: Option<&str>) -> std::result::Result<(), String> {
    let n = match var.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| format!("WORKBENCH_THREADS must be a count, got `{v}`"))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn emit(g: &Global, out: &Output, stdout: &mut dyn Write) -> CliResult<()> {
    let text = match (&out.text, g.format) {
        (Some(t), _) => t.clone(),
        (None, Format::Json) => io::to_json(&out.value)?,
        (None, Format::Csv) => flat_csv(&out.value)?,
    };
    match &g.out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Failure::from),
    }
}

/// Two-column CSV of every scalar leaf, keyed by its dotted path.
fn flat_csv(v: &Value) -> CliResult<String> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&key(k), x, rows)),
            Value::Array(a) => a
                .iter()
                .enumerate()
                .for_each(|(i, x)| walk(&key(&i.to_string()), x, rows)),
            Value::Number(n) if n.is_f64() => rows.push((
                prefix.to_string(),
                io::format_f64(n.as_f64().unwrap_or(f64::NAN)),
            )),
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    Ok(String::from_utf8(
        w.into_inner().map_err(|e| Failure(e.to_string()))?,
    )?)
}

fn read_input(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path)
        .map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn dims(g: &Global) -> CliResult<Option<FactorSplit>> {
    g.dims
        .as_deref()
        .map(parse_dims)
        .transpose()
        .map_err(Failure::from)
}

/// A state file, or a bare matrix together with `--dims`. The split and the
/// raw matrix are returned without density validation.
fn read_bipartite_matrix(g: &Global, path: &Path) -> CliResult<(FactorSplit, CMat)> {
    let text = read_input(path)?;
    let probe: Value = io::from_json(&text)?;
    let given = dims(g)?;
    if probe.get("split").is_some() {
        let f: StateFile = io::from_json(&text)?;
        let split = FactorSplit::new(f.split.d_a, f.split.d_b)?;
        if let Some(d) = given {
            if d != split {
                return Err(Failure(format!(
                    "--dims {d} does not match the file's split {split}"
                )));
            }
        }
        Ok((split, f.rho.to_matrix()?))
    } else {
        let m: MatrixJson = io::from_json(&text)?;
        let split =
            given.ok_or_else(|| Failure("a bare matrix input needs --dims dAxdB".into()))?;
        Ok((split, m.to_matrix()?))
    }
}

fn read_state(g: &Global, path: &Path) -> CliResult<BipartiteState> {
    let (split, rho) = read_bipartite_matrix(g, path)?;
    Ok(BipartiteState::new(split, rho)?)
}

fn split_or(g: &Global, default: (usize, usize)) -> CliResult<FactorSplit> {
    Ok(match dims(g)? {
        Some(s) => s,
        None => FactorSplit::new(default.0, default.1)?,
    })
}

fn decomp_options(g: &Global) -> DecompOptions {
    let mut o = DecompOptions::default();
    if let Some(t) = g.tol {
        o.feasibility_tol = t;
    }
    if let Some(m) = g.max_iter {
        o.max_iter = m;
    }
    o
}

fn decomposability_json(d: &Decomposability) -> Value {
    match d {
        Decomposability::Feasible { residual, .. } => {
            json!({"outcome": "feasible", "residual": residual})
        }
        Decomposability::Certificate { witness, value } => {
            json!({"outcome": "certificate", "pairing_value": value, "witness": MatrixJson::from_matrix(witness)})
        }
        Decomposability::Inconclusive {
            residual,
            best_value,
        } => {
            json!({"outcome": "inconclusive", "residual": residual, "best_value": best_value})
        }
    }
}

fn execute(cli: &Cli) -> CliResult<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::PptCheck { input } => {
            let s = read_state(g, input)?;
            let v = states::is_ppt(&s);
            let is_ppt = match g.tol {
                Some(t) => v.min_eig >= -t,
                None => v.is_ppt,
            };
            Ok(Output::ok(json!({
                "dims": s.split().to_string(),
                "is_ppt": is_ppt,
                "min_eig": v.min_eig,
                "min_eig_via_a": states::is_ppt_via_a(&s).min_eig,
            })))
        }
        Command::EntangleMap { input, direction } => {
            let s = read_state(g, input)?;
            let h = EntanglingOperator::new(&s)?;
            let (name, m) = match direction {
                Direction::PhiStar => ("phi_star", h.phi_star()),
                Direction::Phi => ("phi", h.phi()),
            };
            let v = classify_cp(&m)?;
            Ok(Output::ok(json!({
                "direction": name,
                "d_in": m.d_in(),
                "d_out": m.d_out(),
                "choi": MatrixJson::from_matrix(m.choi()),
                "cp": v.cp,
                "co_cp": v.co_cp,
                "min_choi_eig": v.min_choi_eig,
                "min_co_choi_eig": v.min_co_choi_eig,
                "state_is_ppt": states::is_ppt(&s).is_ppt,
            })))
        }
        Command::ClassifyMap { input } => {
            let split =
                dims(g)?.ok_or_else(|| Failure("classify-map needs --dims dinxdout".into()))?;
            let choi = io::parse_matrix(&read_input(input)?)?;
            let m = LinearMap::from_choi(split.d_a, split.d_b, choi)?;
            let cp = classify_cp(&m)?;
            let pos = is_positive_map(&m, SearchBudget::default(), g.seed)?;
            let dec = is_decomposable(&m, decomp_options(g))?;
            Ok(Output::ok(json!({
                "cp": cp.cp,
                "co_cp": cp.co_cp,
                "min_choi_eig": cp.min_choi_eig,
                "min_co_choi_eig": cp.min_co_choi_eig,
                "positivity_violation_found": pos.is_violation(),
                "positivity_value": pos.value(),
                "decomposability": decomposability_json(&dec),
            })))
        }
        Command::Measure {
            input,
            which,
            restarts,
        } => {
            let (split, x) = read_bipartite_matrix(g, input)?;
            let xi = ConeVector::new(split, x)?;
            let mut dopts = DykstraOptions::default();
            if let Some(t) = g.tol {
                dopts.tol = t;
            }
            if let Some(m) = g.max_iter {
                dopts.max_iter = m;
            }
            let mut out = serde_json::Map::new();
            out.insert("dims".into(), json!(split.to_string()));
            if matches!(which, Which::Dge | Which::Both) {
                let d = dykstra_project(&xi, &dopts)?;
                out.insert("d_ge".into(), json!(d.distance));
                out.insert(
                    "dykstra".into(),
                    json!({"iterations": d.iterations, "converged": d.converged, "kkt_gap": d.kkt_gap}),
                );
            }
            if matches!(which, Which::De | Which::Both) {
                let sopts = SeesawOptions {
                    restarts: *restarts,
                    ..Default::default()
                };
                let a = d_e_upper(&xi, &sopts, g.seed)?;
                out.insert(
                    "d_e_lower".into(),
                    json!(dykstra_project(&xi, &dopts)?.distance),
                );
                out.insert("d_e_upper".into(), json!(a.value));
                out.insert("product_terms".into(), json!(a.terms.len()));
            }
            Ok(Output::ok(Value::Object(out)))
        }
        Command::Stormer { input } => {
            let (pair, generated) = match input {
                Some(p) => {
                    #[derive(serde::Deserialize)]
                    struct PairFile {
                        a1: MatrixJson,
                        a2: MatrixJson,
                    }
                    let f: PairFile = io::from_json(&read_input(p)?)?;
                    (
                        StormerPair::new(f.a1.to_matrix()?, f.a2.to_matrix()?)?,
                        false,
                    )
                }
                None => (random_normal_pair(split_or(g, (3, 3))?.d_a, g.seed), true),
            };
            let v = stormer_condition(&pair)?;
            let mut out = json!({
                "dim": pair.dim(),
                "condition_holds": v.holds(),
                "min_eig_block": v.min_eig_block,
                "min_eig_transposed": v.min_eig_transposed,
            });
            if generated {
                out["a1"] = json!(MatrixJson::from_matrix(&pair.a1));
                out["a2"] = json!(MatrixJson::from_matrix(&pair.a2));
            }
            out["decomposition"] = match canonical_decomposition(&pair) {
                Ok(d) => json!({
                    "lambda_re": d.lambdas().iter().map(|l| l.re).collect::<Vec<_>>(),
                    "lambda_im": d.lambdas().iter().map(|l| l.im).collect::<Vec<_>>(),
                    "normality_residual": d.normality_residual,
                    "a2_residual": d.a2_residual,
                    "block_residual": d.block_residual,
                    "separable_residual": d.separable_residual,
                    "partial": d.partial,
                }),
                Err(e) => json!({"error": e.to_string()}),
            };
            Ok(Output::ok(out))
        }
        Command::Ckl { action } => ckl(g, action),
        Command::TomitaVerify { input, dim, trials } => {
            let rho = match input {
                Some(p) => io::parse_matrix(&read_input(p)?)?,
                None => rng::random_density_matrix(&mut rng::seeded(g.seed), *dim, *dim),
            };
            let sf = standard_form(&rho)?;
            let inv = check_standard_form(&sf, *trials, g.seed);
            let tr = verify_transposition_structure(&sf, *trials, g.seed)?;
            let tol = g.tol.unwrap_or(TOMITA_TOL);
            let worst = inv
                .max_residual()
                .max(tr.conjugation_residual)
                .max(tr.polar_residual);
            Ok(Output {
                value: json!({
                    "dim": sf.dim(),
                    "tolerance": tol,
                    "passed": worst <= tol,
                    "standard_form": inv,
                    "transposition": tr,
                }),
                violation: worst > tol,
                text: None,
            })
        }
        Command::Compare { input, probes } => {
            let s = read_state(g, input)?;
            let ctx = ConeContext::maximally_mixed(s.split());
            let rec = compare_characterizations(&s, &ctx, *probes, g.seed)?;
            Ok(Output::ok(serde_json::to_value(rec)?))
        }
        Command::Gen { kind } => generate(g, kind),
        Command::BatchVerify {
            config,
            quick,
            csv_out,
        } => {
            let cfg = match config {
                Some(p) => io::from_json::<BatchConfig>(&read_input(p)?)?,
                None if *quick => BatchConfig::quick(g.seed),
                None => BatchConfig::full(g.seed),
            };
            let report = run_batch(&cfg)?;
            if let Some(p) = csv_out {
                std::fs::write(p, report.to_csv()?)
                    .map_err(|e| Failure(format!("cannot write {}: {e}", p.display())))?;
            }
            let text = match g.format {
                Format::Json => report.to_json()?,
                Format::Csv => report.to_csv()?,
            };
            Ok(Output {
                value: Value::Null,
                violation: !report.passed(),
                text: Some(text),
            })
        }
    }
}

fn ckl(g: &Global, action: &CklAction) -> CliResult<Output> {
    match action {
        CklAction::Classify { a, b, c } => {
            let p = CklParams::new(*a, *b, *c)?;
            let r = cklmaps::ckl_classify(p, g.seed)?;
            let disagree =
                [r.cp_agree, r.positive_agree, r.decomposable_agree].contains(&Some(false));
            let atom = (*a, *b, *c) == (2.0, 0.0, 1.0);
            Ok(Output {
                value: json!({
                    "params": {"a": a, "b": b, "c": c},
                    "positive": r.analytic.positive,
                    "cp": r.analytic.cp,
                    "decomposable": r.analytic.decomposable,
                    "atom_note": atom,
                    "margins": r.margins,
                    "numeric": r.numeric,
                    "agree": {"cp": r.cp_agree, "positive": r.positive_agree, "decomposable": r.decomposable_agree},
                }),
                violation: disagree,
                text: None,
            })
        }
        CklAction::Functional { a, b, c, samples } => {
            let w = cklmaps::ckl_functional(CklParams::new(*a, *b, *c)?)
                .witness_search(*samples, g.seed)?;
            Ok(Output::ok(json!({
                "params": {"a": a, "b": b, "c": c},
                "product_samples": w.product_samples,
                "projective_min_sampled": w.projective_min_sampled,
                "injective_value": w.value,
                "negative_injective_value_found": w.value < 0.0,
                "witness": MatrixJson::from_matrix(&w.injective_witness),
            })))
        }
        CklAction::Grid { points } => {
            let values: Vec<f64> = (0..*points).map(|i| i as f64 / 5.0).collect();
            let r = cklmaps::ckl_grid(&values, g.seed)?;
            let bad = !r.cp_disagreements.is_empty() || !r.positivity_exceptions.is_empty();
            let params =
                |v: &[CklParams]| v.iter().map(|p| json!([p.a, p.b, p.c])).collect::<Vec<_>>();
            Ok(Output {
                value: json!({
                    "points": r.points,
                    "excluded_cp": r.excluded_cp,
                    "excluded_positive": r.excluded_positive,
                    "cp_disagreements": params(&r.cp_disagreements),
                    "positivity_exceptions": params(&r.positivity_exceptions),
                }),
                violation: bad,
                text: None,
            })
        }
    }
}

fn generate(g: &Global, kind: &GenKind) -> CliResult<Output> {
    let state_json =
        |s: &BipartiteState| serde_json::to_value(StateFile::from_state(s)).map_err(Failure::from);
    let value = match kind {
        GenKind::State { rank } => {
            let split = split_or(g, (2, 2))?;
            state_json(&states::random_state(
                split,
                rank.unwrap_or(split.dim()),
                g.seed,
            )?)?
        }
        GenKind::Separable { terms } => {
            state_json(&states::random_separable(split_or(g, (2, 2))?, *terms, g.seed)?.state)?
        }
        GenKind::Isotropic { p } => {
            let split = split_or(g, (2, 2))?;
            if split.d_a != split.d_b {
                return Err(Failure(format!(
                    "isotropic states need dA = dB, got {split}"
                )));
            }
            state_json(&states::isotropic(split.d_a, *p)?)?
        }
        GenKind::Pure => {
            let split = split_or(g, (2, 2))?;
            state_json(&states::random_pure_bipartite(
                split,
                &states::Schmidt::Haar,
                g.seed,
            )?)?
        }
        GenKind::StormerPair => {
            let p = random_normal_pair(split_or(g, (3, 3))?.d_a, g.seed);
            json!({"a1": MatrixJson::from_matrix(&p.a1), "a2": MatrixJson::from_matrix(&p.a2)})
        }
    };
    Ok(Output::ok(value))
}
