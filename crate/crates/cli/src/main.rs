//! Reproducible experiment driver: one subcommand per experiment, JSON/CSV
//! reports with a run manifest, and exit codes CI can gate on.
//!
//! Exit codes: 0 success, 1 an inequality contract was violated (the finding
//! is in the report), 2 argument/validation error, 3 dimension-guard trip.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use opspace::lambda::{
    cauchy_schwarz_check, holder_check, AtomPartition, FiniteMeasureSpace, MatrixField,
};
use opspace::linalg::split_rng;
use opspace::martingale::{
    burkholder_experiment, dual_doob_check, rademacher_khintchine, rosenthal_bracket,
    stein_check, DyadicSpace,
};
use opspace::nc::{cb_oh_limit, nc_burkholder4, nc_holder_check, BlockSubalgebra, NcElement};
use opspace::partitions::{
    for_each_partition, khintchine_constant, lacunary_khintchine_check,
    mobius_decomposition_check, MomentFunction,
};
use opspace::randmat::{moment_exact, moment_mc, rm_khintchine_constant, GinibreSpec};
use opspace::torus::{
    cotlar_residual, hilbert_cb_experiment, littlewood_paley_check, TrigPolynomial,
};
use opspace::{ComplexMatrix, Error as CoreError, C64};
use rand::Rng;

#[derive(Parser)]
#[command(
    name = "opspace",
    version,
    about = "Exact desk-scale experiments on operator-space norms and inequalities"
)]
struct Cli {
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Override the global dimension guard (OPSPACE_MAX_DIM).
    #[arg(long, global = true)]
    max_dim: Option<usize>,

    /// Relative slack applied to inequality contracts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Root seed; instances derive independent streams from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of random instances.
    #[arg(long, default_value_t = 1)]
    instances: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Λ_p norms of randomly drawn fields, trace elements, or polynomials.
    Norms {
        #[command(flatten)]
        common: Common,
        /// Even exponents to evaluate (repeatable).
        #[arg(long = "p", required = true)]
        p: Vec<usize>,
        /// Operator coefficient dimension.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// What to draw the element from.
        #[arg(long, value_enum, default_value_t = NormKind::Field)]
        kind: NormKind,
        /// Atom count (field), matrix size (nc), or degree (torus).
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Square-function comparison x = ‖f‖_(p) vs y = ‖S(f)‖^{1/2}_(p/2).
    Burkholder {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        /// Dyadic filtration depth.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// ‖∫α^{⊗̇m}‖ ≤ m^m‖∫β^{⊗̇m}‖ with α the level-projected squares.
    Dualdoob {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// ‖∫v^{⊗̇m}‖ ≤ m^m‖∫δ^{⊗̇m}‖ for predictable-projection sums.
    Stein {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// ‖f‖_(p) against the conditioned-square-plus-diagonal bracket.
    Rosenthal {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Λ_p norms of f and Tf for the circle Hilbert transform.
    Hilbert {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        degree: i64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Littlewood–Paley dyadic-block square function on analytic polynomials.
    Lpaley {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 8)]
        degree: i64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Khintchine constants and the Rademacher comparison.
    Khintchine {
        #[command(subcommand)]
        family: KhintchineFamily,
    },
    /// Ginibre trace moments: exact pairing sums, Monte-Carlo, constants.
    Randmat {
        #[command(subcommand)]
        mode: RandmatMode,
    },
    /// Möbius mass Σ|μ(0̂,π)| = n! and the decomposition identity.
    Mobius {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Check Σ|μ(0̂,π)| against n!.
        #[arg(long)]
        sum_abs: bool,
        /// Check the multilinear decomposition identity on random data.
        #[arg(long)]
        decomposition: bool,
        /// Index-set size for the decomposition check.
        #[arg(long, default_value_t = 3)]
        index_count: usize,
    },
    /// Λ(p)-set counting and the lacunary Khintchine bound on the circle.
    Lacunary {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        /// Comma-separated frequency set, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1i64, 2, 4, 8])]
        freqs: Vec<i64>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// The nondecreasing sequence ‖f‖_(2^m) toward the limit norm.
    CbLimit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Matrix algebra size.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
    },
    /// p = 4 martingale comparison over M_n along a subalgebra chain.
    NcBurkholder4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Inequality fuzzing campaigns with explicit violation reporting.
    Fuzz {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: FuzzTarget,
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NormKind {
    Field,
    Nc,
    Torus,
}

#[derive(Subcommand)]
enum KhintchineFamily {
    /// ‖Σ b_k ε_k‖_(p) between ‖Σ b_k ⊗ b̄_k‖^{1/2} and the Gaussian constant.
    Rademacher {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: usize,
        /// Number of coefficients.
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// ((p−1)!!)^{1/p}, the optimal Gaussian constant.
    GaussianConst {
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
    /// (Σ_ν |q|^{crossings})^{1/p}.
    QGaussian {
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// Catalan(p/2)^{1/p}, bounded by 2.
    Free {
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
    /// Spin systems share the Gaussian constant through |ψ| ≡ 1.
    Spin {
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
}

#[derive(Subcommand)]
enum RandmatMode {
    /// Exact E τ_N(|Y|^p) as a pairing sum.
    Exact {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
    /// Seeded Monte-Carlo estimate with a 4σ consistency contract.
    Mc {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The optimal constant (E τ_N(|Y|^p))^{1/p}.
    Constant {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FuzzTarget {
    /// ‖∫f⊗̇g‖ ≤ ‖∫f⊗̇f̄‖^{1/2}‖∫g⊗̇ḡ‖^{1/2}.
    CauchySchwarz,
    /// ‖∫f₁⊗̇…⊗̇f_p‖ ≤ Π‖f_k‖_(p).
    Holder,
    /// The trace version of the Hölder bound.
    NcHolder,
    /// 0 ≺ x ≺ y forces ‖x‖ ≤ ‖y‖.
    Cone,
    /// Conditional expectations contract every Λ_p.
    CondExp,
    /// Trace-preserving expectations onto block subalgebras contract Λ_p.
    CondExpNc,
    /// The m^m dual Doob bound.
    DualDoob,
    /// The m^m Stein bound.
    Stein,
    /// Pointwise cone domination controls Λ_p norms.
    PointwiseDomination,
}

#[derive(Serialize)]
struct Manifest {
    subcommand: String,
    parameters: BTreeMap<String, Value>,
    seed: u64,
    tolerance: f64,
    statement: String,
    library_version: String,
    max_dim: usize,
    wall_clock_ms: u64,
}

#[derive(Serialize)]
struct Report {
    manifest: Manifest,
    results: Vec<BTreeMap<String, Value>>,
    violations: Vec<String>,
}

type Row = BTreeMap<String, Value>;

struct Outcome {
    statement: String,
    parameters: BTreeMap<String, Value>,
    seed: u64,
    results: Vec<Row>,
    violations: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(max) = cli.max_dim {
        std::env::set_var("OPSPACE_MAX_DIM", max.to_string());
    }
    let started = Instant::now();
    let tol = cli.tol;
    let subcommand = subcommand_name(&cli.command);
    match run(&cli.command, tol) {
        Ok(outcome) => {
            let violated = !outcome.violations.is_empty();
            let report = Report {
                manifest: Manifest {
                    subcommand,
                    parameters: outcome.parameters,
                    seed: outcome.seed,
                    tolerance: tol,
                    statement: outcome.statement,
                    library_version: env!("CARGO_PKG_VERSION").to_string(),
                    max_dim: opspace::linalg::max_dim(),
                    wall_clock_ms: started.elapsed().as_millis() as u64,
                },
                results: outcome.results,
                violations: outcome.violations,
            };
            if let Err(e) = emit(&report, cli.format, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CoreError::DimensionGuard { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn subcommand_name(cmd: &Command) -> String {
    match cmd {
        Command::Norms { .. } => "norms",
        Command::Burkholder { .. } => "burkholder",
        Command::Dualdoob { .. } => "dualdoob",
        Command::Stein { .. } => "stein",
        Command::Rosenthal { .. } => "rosenthal",
        Command::Hilbert { .. } => "hilbert",
        Command::Lpaley { .. } => "lpaley",
        Command::Khintchine { .. } => "khintchine",
        Command::Randmat { .. } => "randmat",
        Command::Mobius { .. } => "mobius",
        Command::Lacunary { .. } => "lacunary",
        Command::CbLimit { .. } => "cb-limit",
        Command::NcBurkholder4 { .. } => "nc-burkholder4",
        Command::Fuzz { .. } => "fuzz",
    }
    .to_string()
}

fn emit(report: &Report, format: Format, out: Option<&std::path::Path>) -> std::io::Result<()> {
    let body = match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => to_csv(&report.results),
    };
    match out {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

/// RFC-4180 flat projection of the result rows.
fn to_csv(rows: &[Row]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        for key in row.keys() {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
    }
    columns.sort();
    let quote = |s: &str| -> String {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = columns
        .iter()
        .map(|c| quote(c))
        .collect::<Vec<_>>()
        .join(",");
    out.push_str("\r\n");
    for row in rows {
        let line: Vec<String> = columns
            .iter()
            .map(|c| match row.get(c) {
                None => String::new(),
                Some(Value::String(s)) => quote(s),
                Some(v) => quote(&v.to_string()),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push_str("\r\n");
    }
    out
}

fn jf(v: f64) -> Value {
    json!(v)
}

fn run(cmd: &Command, tol: f64) -> Result<Outcome, CoreError> {
    match cmd {
        Command::Norms {
            common,
            p,
            dim,
            kind,
            n,
        } => run_norms(common, p, *dim, *kind, *n),
        Command::Burkholder {
            common,
            p,
            levels,
            dim,
        } => run_burkholder(common, *p, *levels, *dim),
        Command::Dualdoob {
            common,
            m,
            levels,
            dim,
        } => run_dualdoob(common, *m, *levels, *dim, tol),
        Command::Stein {
            common,
            m,
            levels,
            dim,
        } => run_stein(common, *m, *levels, *dim, tol),
        Command::Rosenthal {
            common,
            p,
            levels,
            dim,
        } => run_rosenthal(common, *p, *levels, *dim),
        Command::Hilbert {
            common,
            p,
            degree,
            dim,
        } => run_hilbert(common, *p, *degree, *dim),
        Command::Lpaley {
            common,
            p,
            degree,
            dim,
        } => run_lpaley(common, *p, *degree, *dim),
        Command::Khintchine { family } => run_khintchine(family, tol),
        Command::Randmat { mode } => run_randmat(mode),
        Command::Mobius {
            common,
            n,
            sum_abs,
            decomposition,
            index_count,
        } => run_mobius(common, *n, *sum_abs, *decomposition, *index_count),
        Command::Lacunary {
            common,
            p,
            freqs,
            dim,
        } => run_lacunary(common, *p, freqs, *dim, tol),
        Command::CbLimit {
            common,
            dim,
            n,
            m_max,
        } => run_cb_limit(common, *dim, *n, *m_max),
        Command::NcBurkholder4 { common, dim, n } => run_nc_burkholder4(common, *dim, *n),
        Command::Fuzz { common, target, p } => run_fuzz(common, *target, *p, tol),
    }
}

fn params(entries: &[(&str, Value)]) -> BTreeMap<String, Value> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn run_norms(
    common: &Common,
    ps: &[usize],
    dim: usize,
    kind: NormKind,
    n: usize,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        for &p in ps {
            let (norm, kind_name): (f64, &str) = match kind {
                NormKind::Field => {
                    let space = FiniteMeasureSpace::uniform_probability(n);
                    let f = MatrixField::gaussian(space, dim, &mut rng);
                    (f.lambda_norm(p)?, "field")
                }
                NormKind::Nc => {
                    let f = NcElement::gaussian(dim, n, 2, &mut rng);
                    (f.lambda_norm(p)?, "nc")
                }
                NormKind::Torus => {
                    let f = TrigPolynomial::new(
                        dim,
                        (-(n as i64)..=n as i64)
                            .map(|k| (k, ComplexMatrix::gaussian(dim, &mut rng))),
                    )?;
                    (f.lambda_norm(p)?, "torus")
                }
            };
            let mut row = Row::new();
            row.insert("instance".into(), json!(idx));
            row.insert("p".into(), json!(p));
            row.insert("kind".into(), json!(kind_name));
            row.insert("norm".into(), jf(norm));
            results.push(row);
        }
    }
    Ok(Outcome {
        statement:
            "lambda_p(f) = |integral of the m-fold conjugate-paired tensor power|^(1/p)".into(),
        parameters: params(&[
            ("p", json!(ps)),
            ("dim", json!(dim)),
            ("n", json!(n)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations: Vec::new(),
    })
}

fn run_burkholder(
    common: &Common,
    p: usize,
    levels: usize,
    dim: usize,
) -> Result<Outcome, CoreError> {
    let bound = 2f64.sqrt() + 3f64.sqrt();
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let dyadic = DyadicSpace::new(levels)?;
        let f = MatrixField::gaussian(dyadic.space().clone(), dim, &mut rng);
        let r = burkholder_experiment(&f, dyadic.filtration(), p)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("x".into(), jf(r.x));
        row.insert("y".into(), jf(r.y));
        row.insert("ratio_xy".into(), jf(r.x / r.y));
        row.insert("ratio_yx".into(), jf(r.y / r.x));
        row.insert("max_ratio".into(), jf(r.max_ratio));
        results.push(row);
        if p == 4 && r.max_ratio > bound + 1e-6 {
            violations.push(format!(
                "instance {idx}: max ratio {} exceeds sqrt(2)+sqrt(3)",
                r.max_ratio
            ));
        }
    }
    Ok(Outcome {
        statement: "max(x/y, y/x) <= sqrt(2)+sqrt(3) at p=4 for x=|f|_(4), y=|S(f)|_(2)^(1/2)"
            .into(),
        parameters: params(&[
            ("p", json!(p)),
            ("levels", json!(levels)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn push_ratio_row(results: &mut Vec<Row>, idx: u64, r: &opspace::lambda::RatioReport) {
    let mut row = Row::new();
    row.insert("instance".into(), json!(idx));
    row.insert("lhs".into(), jf(r.lhs));
    row.insert("rhs".into(), jf(r.rhs));
    row.insert("ratio".into(), jf(r.ratio));
    results.push(row);
}

fn run_dualdoob(
    common: &Common,
    m: usize,
    levels: usize,
    dim: usize,
    tol: f64,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let dyadic = DyadicSpace::new(levels)?;
        let thetas: Vec<MatrixField> = (0..levels)
            .map(|_| MatrixField::gaussian(dyadic.space().clone(), dim, &mut rng))
            .collect();
        let r = dual_doob_check(&thetas, dyadic.filtration(), m)?;
        push_ratio_row(&mut results, idx, &r);
        if !r.holds(tol) {
            violations.push(format!("instance {idx}: ratio {} exceeds 1", r.ratio));
        }
    }
    Ok(Outcome {
        statement: "|E(alpha^m)| <= m^m |E(beta^m)| for alpha = sum E_n(theta_n x conj)".into(),
        parameters: params(&[
            ("m", json!(m)),
            ("levels", json!(levels)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_stein(
    common: &Common,
    m: usize,
    levels: usize,
    dim: usize,
    tol: f64,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let dyadic = DyadicSpace::new(levels)?;
        let xs: Vec<MatrixField> = (0..levels)
            .map(|_| MatrixField::gaussian(dyadic.space().clone(), dim, &mut rng))
            .collect();
        let r = stein_check(&xs, dyadic.filtration(), m)?;
        push_ratio_row(&mut results, idx, &r);
        if !r.holds(tol) {
            violations.push(format!("instance {idx}: ratio {} exceeds 1", r.ratio));
        }
    }
    Ok(Outcome {
        statement: "|E(v^m)| <= m^m |E(delta^m)| for predictable projections v".into(),
        parameters: params(&[
            ("m", json!(m)),
            ("levels", json!(levels)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_rosenthal(
    common: &Common,
    p: usize,
    levels: usize,
    dim: usize,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let dyadic = DyadicSpace::new(levels)?;
        let f = MatrixField::gaussian(dyadic.space().clone(), dim, &mut rng);
        let r = rosenthal_bracket(&f, dyadic.filtration(), p)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("norm".into(), jf(r.norm));
        row.insert("bracket".into(), jf(r.bracket));
        row.insert("sigma_term".into(), jf(r.sigma_term));
        row.insert("diagonal_term".into(), jf(r.diagonal_term));
        row.insert("ratio_norm_over_bracket".into(), jf(r.norm / r.bracket));
        results.push(row);
    }
    Ok(Outcome {
        statement: "|f|_(p) tracked against the conditioned-square-plus-diagonal bracket (empirical envelope, no asserted constant)".into(),
        parameters: params(&[
            ("p", json!(p)),
            ("levels", json!(levels)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations: Vec::new(),
    })
}

fn run_hilbert(common: &Common, p: usize, degree: i64, dim: usize) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let f = TrigPolynomial::new(
            dim,
            (-degree..=degree).map(|k| (k, ComplexMatrix::gaussian(dim, &mut rng))),
        )?;
        let r = hilbert_cb_experiment(&f, p)?;
        let cot = cotlar_residual(&f, &f)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("norm_f".into(), jf(r.norm_f));
        row.insert("norm_tf".into(), jf(r.norm_tf));
        row.insert("ratio".into(), jf(r.ratio));
        row.insert("cotlar_residual".into(), jf(cot.residual));
        results.push(row);
        if cot.residual > 1e-10 * cot.scale {
            violations.push(format!(
                "instance {idx}: multiplier identity residual {} above 1e-10 relative",
                cot.residual
            ));
        }
    }
    Ok(Outcome {
        statement: "T(fg - Tf Tg) = f Tg + Tf g; |Tf|_(p)/|f|_(p) logged (no explicit constant)"
            .into(),
        parameters: params(&[
            ("p", json!(p)),
            ("degree", json!(degree)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_lpaley(common: &Common, p: usize, degree: i64, dim: usize) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let f = TrigPolynomial::new(
            dim,
            (1..=degree).map(|k| (k, ComplexMatrix::gaussian(dim, &mut rng))),
        )?;
        let r = littlewood_paley_check(&f, p)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("norm_f".into(), jf(r.norm_f));
        row.insert("square_norm".into(), jf(r.square_norm));
        row.insert("ratio".into(), jf(r.ratio));
        results.push(row);
    }
    Ok(Outcome {
        statement: "|f|_(p) vs |S(f)|_(p/2)^(1/2) over dyadic frequency blocks (ratio logged)"
            .into(),
        parameters: params(&[
            ("p", json!(p)),
            ("degree", json!(degree)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations: Vec::new(),
    })
}

fn run_khintchine(family: &KhintchineFamily, tol: f64) -> Result<Outcome, CoreError> {
    match family {
        KhintchineFamily::Rademacher { common, p, n, dim } => {
            let mut results = Vec::new();
            let mut violations = Vec::new();
            for idx in 0..common.instances as u64 {
                let mut rng = split_rng(common.seed, idx);
                let bs: Vec<ComplexMatrix> = (0..*n)
                    .map(|_| ComplexMatrix::gaussian(*dim, &mut rng))
                    .collect();
                let r = rademacher_khintchine(&bs, *p)?;
                let mut row = Row::new();
                row.insert("instance".into(), json!(idx));
                row.insert("lhs".into(), jf(r.lhs));
                row.insert("rhs".into(), jf(r.rhs));
                row.insert("constant".into(), jf(r.constant));
                results.push(row);
                if r.rhs > r.lhs + tol * (1.0 + r.lhs) {
                    violations.push(format!("instance {idx}: lower bound fails"));
                }
                if r.lhs > r.constant * r.rhs + tol * (1.0 + r.rhs) {
                    violations.push(format!("instance {idx}: upper constant fails"));
                }
            }
            Ok(Outcome {
                statement: "|sum b_k eps_k|_(p) between |sum b_k x conj(b_k)|^(1/2) and ((p-1)!!)^(1/p) times it".into(),
                parameters: params(&[
                    ("family", json!("rademacher")),
                    ("p", json!(p)),
                    ("n", json!(n)),
                    ("dim", json!(dim)),
                    ("instances", json!(common.instances)),
                ]),
                seed: common.seed,
                results,
                violations,
            })
        }
        KhintchineFamily::GaussianConst { p } => constant_outcome(
            "gaussian",
            *p,
            khintchine_constant(MomentFunction::Gaussian, *p)?,
            "((p-1)!!)^(1/p), optimal for pairing weight 1",
        ),
        KhintchineFamily::QGaussian { p, q } => {
            let mut outcome = constant_outcome(
                "q-gaussian",
                *p,
                khintchine_constant(MomentFunction::QGaussian(*q), *p)?,
                "(sum over pairings of |q|^crossings)^(1/p)",
            )?;
            outcome.parameters.insert("q".into(), jf(*q));
            Ok(outcome)
        }
        KhintchineFamily::Free { p } => constant_outcome(
            "free",
            *p,
            khintchine_constant(MomentFunction::Free, *p)?,
            "Catalan(p/2)^(1/p), bounded by 2",
        ),
        KhintchineFamily::Spin { p } => constant_outcome(
            "spin",
            *p,
            khintchine_constant(MomentFunction::Spin, *p)?,
            "same as gaussian through |psi| = 1",
        ),
    }
}

fn constant_outcome(
    family: &str,
    p: usize,
    value: f64,
    provenance: &str,
) -> Result<Outcome, CoreError> {
    let mut row = Row::new();
    row.insert("family".into(), json!(family));
    row.insert("p".into(), json!(p));
    row.insert("constant".into(), jf(value));
    row.insert("provenance".into(), json!(provenance));
    Ok(Outcome {
        statement: format!("khintchine constant C_psi,p for the {family} pairing weights"),
        parameters: params(&[("family", json!(family)), ("p", json!(p))]),
        seed: 0,
        results: vec![row],
        violations: Vec::new(),
    })
}

fn run_randmat(mode: &RandmatMode) -> Result<Outcome, CoreError> {
    match mode {
        RandmatMode::Exact { n, p } => {
            let value = moment_exact(*n, *p)?;
            let mut row = Row::new();
            row.insert("n".into(), json!(n));
            row.insert("p".into(), json!(p));
            row.insert("moment".into(), jf(value));
            Ok(Outcome {
                statement: "E tau_N(|Y|^p) = sum of pairing weights N^(cycles - 1 - p/2)".into(),
                parameters: params(&[("n", json!(n)), ("p", json!(p))]),
                seed: 0,
                results: vec![row],
                violations: Vec::new(),
            })
        }
        RandmatMode::Mc { n, p, samples, seed } => {
            let exact = moment_exact(*n, *p)?;
            let mc = moment_mc(GinibreSpec::new(*n, *seed)?, *p, *samples)?;
            let consistent = mc.consistent_with(exact, 4.0);
            let mut row = Row::new();
            row.insert("n".into(), json!(n));
            row.insert("p".into(), json!(p));
            row.insert("estimate".into(), jf(mc.estimate));
            row.insert("stderr".into(), jf(mc.stderr));
            row.insert("exact".into(), jf(exact));
            row.insert("consistent_4sigma".into(), json!(consistent));
            let violations = if consistent {
                Vec::new()
            } else {
                vec![format!(
                    "estimate {} +/- {} deviates from exact {exact} beyond 4 sigma",
                    mc.estimate, mc.stderr
                )]
            };
            Ok(Outcome {
                statement: "seeded Monte-Carlo of tau_N(|Y|^p) within 4 sigma of the pairing sum"
                    .into(),
                parameters: params(&[
                    ("n", json!(n)),
                    ("p", json!(p)),
                    ("samples", json!(samples)),
                ]),
                seed: *seed,
                results: vec![row],
                violations,
            })
        }
        RandmatMode::Constant { n, p } => {
            let value = rm_khintchine_constant(*n, *p)?;
            let mut row = Row::new();
            row.insert("n".into(), json!(n));
            row.insert("p".into(), json!(p));
            row.insert("constant".into(), jf(value));
            Ok(Outcome {
                statement: "(E tau_N(|Y|^p))^(1/p), the optimal random-matrix constant".into(),
                parameters: params(&[("n", json!(n)), ("p", json!(p))]),
                seed: 0,
                results: vec![row],
                violations: Vec::new(),
            })
        }
    }
}

fn run_mobius(
    common: &Common,
    n: usize,
    sum_abs: bool,
    decomposition: bool,
    index_count: usize,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    if sum_abs || !decomposition {
        let mut mass: i64 = 0;
        for_each_partition(n, |p| mass += p.mobius_from_zero().abs())?;
        let factorial: i64 = (1..=n as i64).product();
        let mut row = Row::new();
        row.insert("n".into(), json!(n));
        row.insert("sum_abs_mobius".into(), json!(mass));
        row.insert("n_factorial".into(), json!(factorial));
        row.insert("matches".into(), json!(mass == factorial));
        results.push(row);
        if mass != factorial {
            violations.push(format!("sum |mu| = {mass} differs from n! = {factorial}"));
        }
    }
    if decomposition {
        for idx in 0..common.instances as u64 {
            let r = mobius_decomposition_check(n, index_count, common.seed.wrapping_add(idx))?;
            let mut row = Row::new();
            row.insert("instance".into(), json!(idx));
            row.insert("residual".into(), jf(r.residual));
            row.insert("scale".into(), jf(r.scale));
            results.push(row);
            if r.residual > 1e-10 * r.scale {
                violations.push(format!(
                    "instance {idx}: decomposition residual {} above 1e-10 relative",
                    r.residual
                ));
            }
        }
    }
    Ok(Outcome {
        statement: "sum over the partition lattice of |mu(0,pi)| equals n!; multilinear decomposition through the Mobius function".into(),
        parameters: params(&[
            ("n", json!(n)),
            ("sum_abs", json!(sum_abs)),
            ("decomposition", json!(decomposition)),
            ("index_count", json!(index_count)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_lacunary(
    common: &Common,
    p: usize,
    freqs: &[i64],
    dim: usize,
    tol: f64,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    let z = opspace::partitions::z_max(freqs, p)?;
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let bs: Vec<ComplexMatrix> = (0..freqs.len())
            .map(|_| ComplexMatrix::gaussian(dim, &mut rng))
            .collect();
        let r = lacunary_khintchine_check(freqs, &bs, p)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("z".into(), json!(z));
        row.insert("lhs".into(), jf(r.lhs));
        row.insert("rhs".into(), jf(r.rhs));
        row.insert("ratio".into(), jf(r.ratio));
        results.push(row);
        if !r.holds(tol) {
            violations.push(format!("instance {idx}: lacunary bound fails"));
        }
    }
    Ok(Outcome {
        statement:
            "|sum b_t e^(it.)|_(p) <= ((4 Z(E))^(1/p) + (9 pi/8) p) |sum b_t x conj(b_t)|^(1/2)"
                .into(),
        parameters: params(&[
            ("p", json!(p)),
            ("freqs", json!(freqs)),
            ("dim", json!(dim)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_cb_limit(common: &Common, dim: usize, n: usize, m_max: usize) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let f = NcElement::gaussian(dim, n, 2, &mut rng);
        let seq = cb_oh_limit(&f, m_max)?;
        let mut prev = 0.0;
        for (step, (p, v)) in seq.iter().enumerate() {
            let mut row = Row::new();
            row.insert("instance".into(), json!(idx));
            row.insert("p".into(), json!(p));
            row.insert("value".into(), jf(*v));
            row.insert(
                "gap_to_previous".into(),
                jf(if step == 0 { 0.0 } else { v - prev }),
            );
            results.push(row);
            if step > 0 && *v < prev - 1e-10 {
                violations.push(format!(
                    "instance {idx}: sequence decreases at p = {p} ({v} after {prev})"
                ));
            }
            prev = *v;
        }
    }
    Ok(Outcome {
        statement: "|f|_(2^m) grows monotonically; the last value is a lower approximation to the limit norm".into(),
        parameters: params(&[
            ("dim", json!(dim)),
            ("n", json!(n)),
            ("m_max", json!(m_max)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn run_nc_burkholder4(common: &Common, dim: usize, n: usize) -> Result<Outcome, CoreError> {
    if n < 2 {
        return Err(CoreError::InvalidArgument(
            "the subalgebra chain needs n >= 2".into(),
        ));
    }
    let mut results = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let f = NcElement::gaussian(dim, n, 2, &mut rng);
        let half = n / 2;
        let chain = vec![
            BlockSubalgebra::trivial(n),
            BlockSubalgebra::scalar_blocks(&[half, n - half])?,
            BlockSubalgebra::pinching(&[half, n - half])?,
            BlockSubalgebra::full(n),
        ];
        let r = nc_burkholder4(&f, &chain)?;
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("norm".into(), jf(r.norm));
        row.insert("square_max".into(), jf(r.square_max));
        row.insert("bracket".into(), jf(r.bracket));
        row.insert(
            "ratio_norm_over_square".into(),
            jf(r.ratio_norm_over_square),
        );
        row.insert(
            "ratio_square_over_norm".into(),
            jf(r.ratio_square_over_norm),
        );
        results.push(row);
    }
    Ok(Outcome {
        statement: "two-sided p=4 comparison of |f|_(4) with the row/column square-function maximum over a subalgebra chain (empirical ratios)".into(),
        parameters: params(&[
            ("dim", json!(dim)),
            ("n", json!(n)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations: Vec::new(),
    })
}

fn run_fuzz(
    common: &Common,
    target: FuzzTarget,
    p: usize,
    tol: f64,
) -> Result<Outcome, CoreError> {
    let mut results = Vec::new();
    let mut violations = Vec::new();
    for idx in 0..common.instances as u64 {
        let mut rng = split_rng(common.seed, idx);
        let (label, holds, ratio): (&str, bool, f64) = match target {
            FuzzTarget::CauchySchwarz => {
                let space = random_space(&mut rng, 4)?;
                let dim = 1 + (idx as usize) % 3;
                let f = MatrixField::gaussian(space.clone(), dim, &mut rng);
                let g = MatrixField::gaussian(space, dim, &mut rng);
                let r = cauchy_schwarz_check(&f, &g)?;
                ("cauchy-schwarz", r.holds(tol), r.ratio)
            }
            FuzzTarget::Holder => {
                let space = random_space(&mut rng, 4)?;
                let dim = if p >= 6 {
                    1 + (idx as usize) % 2
                } else {
                    1 + (idx as usize) % 3
                };
                let fields: Vec<MatrixField> = (0..p)
                    .map(|_| MatrixField::gaussian(space.clone(), dim, &mut rng))
                    .collect();
                let r = holder_check(&fields, p)?;
                ("holder", r.holds(tol), r.ratio)
            }
            FuzzTarget::NcHolder => {
                let n = 1 + (rng.gen::<u32>() as usize) % 3;
                let dim = if p >= 6 {
                    1 + (idx as usize) % 2
                } else {
                    1 + (idx as usize) % 3
                };
                let fs: Vec<NcElement> = (0..p)
                    .map(|_| NcElement::gaussian(dim, n, 2, &mut rng))
                    .collect();
                let r = nc_holder_check(&fs, p)?;
                ("nc-holder", r.holds(tol), r.ratio)
            }
            FuzzTarget::Cone => {
                use opspace::cone::PairedTensor;
                let m = 1 + (rng.gen::<u32>() as usize) % 2;
                let dim = 1 + (rng.gen::<u32>() as usize) % 3;
                let gram = |terms: usize, rng: &mut rand_chacha::ChaCha8Rng| {
                    let elements: Vec<Vec<ComplexMatrix>> = (0..terms)
                        .map(|_| (0..m).map(|_| ComplexMatrix::gaussian(dim, rng)).collect())
                        .collect();
                    PairedTensor::gram(&elements)
                };
                let x = gram(1 + (rng.gen::<u32>() as usize) % 2, &mut rng)?;
                let y = x.add(&gram(1, &mut rng)?)?;
                let nx = x.spectral_norm()?;
                let ny = y.spectral_norm()?;
                (
                    "cone",
                    nx <= ny + 1e-8,
                    if ny == 0.0 { 0.0 } else { nx / ny },
                )
            }
            FuzzTarget::CondExp => {
                let space = random_space(&mut rng, 4)?;
                let dim = 1 + (idx as usize) % 2;
                let f = MatrixField::gaussian(space.clone(), dim, &mut rng);
                let partition = random_partition(space.atoms(), &mut rng)?;
                let g = f.conditional_expectation(&partition)?;
                let before = f.lambda_norm(p.min(4))?;
                let after = g.lambda_norm(p.min(4))?;
                (
                    "cond-exp",
                    after <= before + tol,
                    if before == 0.0 { 0.0 } else { after / before },
                )
            }
            FuzzTarget::CondExpNc => {
                let f = NcElement::gaussian(1 + (idx as usize) % 2, 4, 2, &mut rng);
                let alg = match idx % 3 {
                    0 => BlockSubalgebra::diagonal(4),
                    1 => BlockSubalgebra::pinching(&[2, 2])?,
                    _ => BlockSubalgebra::scalar_blocks(&[2, 2])?,
                };
                let g = opspace::nc::nc_conditional_expectation(&f, &alg)?;
                let before = f.lambda_norm(p.min(4))?;
                let after = g.lambda_norm(p.min(4))?;
                (
                    "cond-exp-nc",
                    after <= before + tol,
                    if before == 0.0 { 0.0 } else { after / before },
                )
            }
            FuzzTarget::DualDoob => {
                let dyadic = DyadicSpace::new(2)?;
                let thetas: Vec<MatrixField> = (0..2)
                    .map(|_| MatrixField::gaussian(dyadic.space().clone(), 2, &mut rng))
                    .collect();
                let m = 1 + (idx as usize) % 2;
                let r = dual_doob_check(&thetas, dyadic.filtration(), m)?;
                ("dual-doob", r.holds(tol), r.ratio)
            }
            FuzzTarget::Stein => {
                let dyadic = DyadicSpace::new(2)?;
                let xs: Vec<MatrixField> = (0..2)
                    .map(|_| MatrixField::gaussian(dyadic.space().clone(), 2, &mut rng))
                    .collect();
                let m = 1 + (idx as usize) % 2;
                let r = stein_check(&xs, dyadic.filtration(), m)?;
                ("stein", r.holds(tol), r.ratio)
            }
            FuzzTarget::PointwiseDomination => {
                let space = random_space(&mut rng, 4)?;
                let f = MatrixField::gaussian(space.clone(), 2, &mut rng);
                let values: Vec<ComplexMatrix> = f
                    .values()
                    .iter()
                    .map(|v| {
                        let r = rng.gen::<f64>();
                        let th = rng.gen::<f64>() * std::f64::consts::TAU;
                        v.scale(C64::new(r * th.cos(), r * th.sin()))
                    })
                    .collect();
                let g = MatrixField::new(space, values)?;
                let before = f.lambda_norm(p.min(4))?;
                let after = g.lambda_norm(p.min(4))?;
                (
                    "pointwise-domination",
                    after <= before + 1e-8,
                    if before == 0.0 { 0.0 } else { after / before },
                )
            }
        };
        let mut row = Row::new();
        row.insert("instance".into(), json!(idx));
        row.insert("target".into(), json!(label));
        row.insert("holds".into(), json!(holds));
        row.insert("ratio".into(), jf(ratio));
        results.push(row);
        if !holds {
            violations.push(format!("instance {idx}: {label} violated (ratio {ratio})"));
        }
    }
    Ok(Outcome {
        statement: "inequality fuzzing campaign; any violation is the payload".into(),
        parameters: params(&[
            ("target", json!(fuzz_target_name(target))),
            ("p", json!(p)),
            ("instances", json!(common.instances)),
        ]),
        seed: common.seed,
        results,
        violations,
    })
}

fn fuzz_target_name(t: FuzzTarget) -> &'static str {
    match t {
        FuzzTarget::CauchySchwarz => "cauchy-schwarz",
        FuzzTarget::Holder => "holder",
        FuzzTarget::NcHolder => "nc-holder",
        FuzzTarget::Cone => "cone",
        FuzzTarget::CondExp => "cond-exp",
        FuzzTarget::CondExpNc => "cond-exp-nc",
        FuzzTarget::DualDoob => "dual-doob",
        FuzzTarget::Stein => "stein",
        FuzzTarget::PointwiseDomination => "pointwise-domination",
    }
}

fn random_space(
    rng: &mut rand_chacha::ChaCha8Rng,
    max_atoms: usize,
) -> Result<FiniteMeasureSpace, CoreError> {
    let atoms = 1 + (rng.gen::<u32>() as usize) % max_atoms;
    FiniteMeasureSpace::from_weights((0..atoms).map(|_| 0.1 + rng.gen::<f64>()).collect())
}

fn random_partition(
    atoms: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<AtomPartition, CoreError> {
    let k = 1 + (rng.gen::<u32>() as usize) % atoms;
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
    for a in 0..atoms {
        blocks[(rng.gen::<u32>() as usize) % k].push(a);
    }
    blocks.retain(|b| !b.is_empty());
    AtomPartition::new(atoms, blocks)
}
