//! Verification and export front end for the operator library.
//!
//! `verify` runs named identity suites and reports one line per identity;
//! `matrix` exports a transition matrix, symbolic (a) or numerically
//! inverted at a sampled point (b); `classes` exports the restriction
//! coefficients of a family. Reports are deterministic for a fixed
//! configuration: every suite draws from its own labeled stream of one
//! seeded generator, so identical configs give byte-identical output.
//!
//! Exit codes: 0 all identities hold, 1 a numeric identity failed or stayed
//! singular after resampling, 2 unusable configuration or arguments.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use elldl::bundle_degree::check_degree_expansion;
use elldl::check::CheckReport;
use elldl::coefficients::{Coefficient, EvalCache, EvaluationPoint};
use elldl::dl_operators::{
    a_matrix, b_matrix_numeric, check_braid, check_closed_form, check_invmat, check_langlands,
    check_mirror, check_squares, eval_a_matrix, OperatorVariant,
};
use elldl::elliptic_classes::{
    mirror_restriction_check, poincare_duality_check, prism_duality_check, restriction_table,
    RestrictionTable, SectionChoice,
};
use elldl::error::{Error, Result};
use elldl::root_system::{bruhat_leq, build_root_datum, DEFAULT_WEYL_CAP};
use elldl::theta::ThetaContext;
use elldl::twisted_algebra::Setting;

#[derive(Parser)]
#[command(name = "elldl", version, about = "Elliptic Demazure-Lusztig operator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; the report has one line per identity.
    Verify(VerifyArgs),
    /// Export a transition matrix of one operator family.
    Matrix(MatrixArgs),
    /// Export the restriction-coefficient table of a class family.
    Classes(ClassesArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Root system: series letter plus rank (A1, A2, A3, B2, C2, G2, ...).
    #[arg(long = "type", value_name = "TYPE", default_value = "A2")]
    root_type: String,

    /// Real part of the modular parameter tau.
    #[arg(long, default_value_t = 0.0)]
    tau_re: f64,

    /// Imaginary part of tau; must be positive.
    #[arg(long, default_value_t = 0.8)]
    tau_im: f64,

    /// Real part of a pinned hbar; omit both hbar flags to sample it.
    #[arg(long)]
    hbar_re: Option<f64>,

    /// Imaginary part of a pinned hbar.
    #[arg(long)]
    hbar_im: Option<f64>,

    /// Theta product truncation order.
    #[arg(long = "trunc", default_value_t = 48)]
    truncation: usize,

    /// Seed for all sampling; fixes the report bytes.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Sample points per numeric identity.
    #[arg(long = "points", default_value_t = 20)]
    num_points: usize,

    /// Residual tolerance for numeric identities.
    #[arg(long = "tol", default_value_t = 1e-8)]
    tolerance: f64,

    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long = "format", value_enum, default_value_t = OutputFormat::Json)]
    output_format: OutputFormat,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Suite to run.
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,

    /// Restrict family-indexed suites to one variant token (e.g. z+l+d).
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Operator family token.
    #[arg(long, default_value = "z+l+")]
    variant: String,

    /// Which table: the symbolic expansion (a) or its numeric inverse (b).
    #[arg(long, value_enum, default_value_t = MatrixKind::A)]
    which: MatrixKind,
}

#[derive(Args)]
struct ClassesArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Class family token (z+l+ or z+l+d).
    #[arg(long, default_value = "z+l+")]
    variant: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Suite {
    Braid,
    Squares,
    Invmat,
    Poincare,
    Mirror,
    ClosedForm,
    Degrees,
    Langlands,
    All,
}

impl Suite {
    const SINGLES: [Suite; 8] = [
        Suite::Braid,
        Suite::Squares,
        Suite::Invmat,
        Suite::Poincare,
        Suite::Mirror,
        Suite::ClosedForm,
        Suite::Degrees,
        Suite::Langlands,
    ];

    fn label(self) -> &'static str {
        match self {
            Suite::Braid => "braid",
            Suite::Squares => "squares",
            Suite::Invmat => "invmat",
            Suite::Poincare => "poincare",
            Suite::Mirror => "mirror",
            Suite::ClosedForm => "closed-form",
            Suite::Degrees => "degrees",
            Suite::Langlands => "langlands",
            Suite::All => "all",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn label(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum MatrixKind {
    A,
    B,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Classes(args) => cmd_classes(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Numeric(_) | Error::Pole { .. } => 1,
                _ => 2,
            })
        }
    }
}

/// Shared run state derived from the common flags.
struct RunContext {
    setting: Setting,
    theta: ThetaContext,
    hbar: Option<Complex64>,
    root_type: String,
    weyl_cap: usize,
    common: CommonArgs,
}

fn build_context(common: &CommonArgs) -> Result<RunContext> {
    if common.tolerance <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if common.num_points < 1 {
        return Err(Error::Config("need at least one sample point".into()));
    }
    let (series, rank) = split_root_type(&common.root_type)?;
    let weyl_cap = weyl_cap_from_env()?;
    let datum = build_root_datum(&series, rank)?;
    let setting = Setting::new(datum, weyl_cap)?;
    let theta = ThetaContext::new(
        Complex64::new(common.tau_re, common.tau_im),
        common.truncation,
    )?;
    let hbar = match (common.hbar_re, common.hbar_im) {
        (None, None) => None,
        (re, im) => Some(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
    };
    Ok(RunContext {
        setting,
        theta,
        hbar,
        root_type: common.root_type.to_uppercase(),
        weyl_cap,
        common: common.clone(),
    })
}

fn split_root_type(root_type: &str) -> Result<(String, usize)> {
    let series: String = root_type
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_uppercase();
    let digits: String = root_type.chars().skip(series.len()).collect();
    let rank: usize = digits
        .parse()
        .map_err(|_| Error::Config(format!("cannot read a rank from '{root_type}'")))?;
    if series.is_empty() {
        return Err(Error::Config(format!(
            "cannot read a series letter from '{root_type}'"
        )));
    }
    Ok((series, rank))
}

fn weyl_cap_from_env() -> Result<usize> {
    match std::env::var("ELLDL_MAX_WEYL") {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::Config(format!("ELLDL_MAX_WEYL must be a positive integer, got '{text}'"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_WEYL_CAP),
        Err(e) => Err(Error::Config(format!("cannot read ELLDL_MAX_WEYL: {e}"))),
    }
}

fn fnv1a64(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Per-suite generator: one seed, one labeled stream per suite, so adding
/// or reordering suites never shifts another suite's samples.
fn suite_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(fnv1a64(label));
    r
}

#[derive(Serialize)]
struct ConfigEcho {
    command: String,
    root_type: String,
    tau: [f64; 2],
    hbar: Option<[f64; 2]>,
    truncation: usize,
    seed: u64,
    num_points: usize,
    tolerance: f64,
    output_format: String,
    weyl_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    which: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section: Option<String>,
}

#[derive(Serialize)]
struct DatumInfo {
    label: String,
    rank: usize,
    cartan: Vec<Vec<i64>>,
    weyl_order: usize,
    /// Canonical reduced words in one-based letters, identity first.
    elements: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct Document<R: Serialize> {
    config: ConfigEcho,
    datum: DatumInfo,
    results: R,
}

#[derive(Serialize)]
struct SuiteResult {
    suite: String,
    pass: bool,
    reports: Vec<CheckReport>,
}

fn config_echo(cx: &RunContext, command: &str) -> ConfigEcho {
    ConfigEcho {
        command: command.into(),
        root_type: cx.root_type.clone(),
        tau: [cx.common.tau_re, cx.common.tau_im],
        hbar: cx.hbar.map(|h| [h.re, h.im]),
        truncation: cx.common.truncation,
        seed: cx.common.seed,
        num_points: cx.common.num_points,
        tolerance: cx.common.tolerance,
        output_format: cx.common.output_format.label().into(),
        weyl_cap: cx.weyl_cap,
        suite: None,
        variant: None,
        which: None,
        section: None,
    }
}

fn datum_info(cx: &RunContext) -> DatumInfo {
    let g = &cx.setting.group;
    DatumInfo {
        label: cx.setting.datum.label.clone(),
        rank: cx.setting.rank(),
        cartan: cx.setting.datum.cartan.clone(),
        weyl_order: g.order(),
        elements: (0..g.order()).map(|i| g.elem(i).word_one_based()).collect(),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text.as_bytes())
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<R: Serialize>(doc: &Document<R>) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::Numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn csv_quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

fn word_label(word: &[usize]) -> String {
    if word.is_empty() {
        "e".into()
    } else {
        word.iter().map(usize::to_string).collect::<Vec<_>>().join("")
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    let cx = build_context(&args.common)?;
    let variants: Vec<OperatorVariant> = match &args.variant {
        Some(token) => vec![OperatorVariant::parse(token)?],
        None => OperatorVariant::ALL.to_vec(),
    };
    let chosen: Vec<Suite> = match args.suite {
        Suite::All => Suite::SINGLES.to_vec(),
        single => vec![single],
    };

    let mut results = Vec::new();
    for suite in chosen {
        let reports = run_suite(&cx, suite, &variants)?;
        let pass = reports.iter().all(|r| r.pass);
        results.push(SuiteResult { suite: suite.label().into(), pass, reports });
    }
    let all_pass = results.iter().all(|s| s.pass);

    for suite in &results {
        for report in &suite.reports {
            for item in report.items.iter().filter(|i| !i.pass) {
                eprintln!(
                    "failed [{}] {}: {} (max residual {:.3e})",
                    suite.suite, report.name, item.identity, item.max_residual
                );
            }
        }
    }

    let mut config = config_echo(&cx, "verify");
    config.suite = Some(args.suite.label().into());
    config.variant = args.variant.clone();
    let doc = Document { config, datum: datum_info(&cx), results };

    let text = match cx.common.output_format {
        OutputFormat::Json => to_json(&doc)?,
        OutputFormat::Csv => {
            let mut text = String::from("suite,report,identity,max_residual,pass\n");
            for suite in &doc.results {
                for report in &suite.reports {
                    for item in &report.items {
                        text.push_str(&format!(
                            "{},{},{},{:e},{}\n",
                            suite.suite,
                            csv_quote(&report.name),
                            csv_quote(&item.identity),
                            item.max_residual,
                            item.pass
                        ));
                    }
                }
            }
            text
        }
    };
    emit(&text, &cx.common.out)?;
    Ok(all_pass)
}

fn run_suite(cx: &RunContext, suite: Suite, variants: &[OperatorVariant]) -> Result<Vec<CheckReport>> {
    let s = &cx.setting;
    let th = &cx.theta;
    let n = cx.common.num_points;
    let tol = cx.common.tolerance;
    let mut rng = suite_rng(cx.common.seed, suite.label());
    let reports = match suite {
        Suite::Braid => vec![check_braid(s, th, &mut rng, cx.hbar, n, tol)?],
        Suite::Squares => vec![check_squares(s, th, &mut rng, cx.hbar, n, tol)?],
        Suite::Invmat => vec![check_invmat(s, th, &mut rng, cx.hbar, n, tol)?],
        Suite::Poincare => {
            let c = SectionChoice::unit();
            vec![
                poincare_duality_check(s, th, &mut rng, cx.hbar, n, tol, &c)?,
                prism_duality_check(s, th, &mut rng, cx.hbar, n, tol, &c)?,
            ]
        }
        Suite::Mirror => {
            let c = SectionChoice::unit();
            vec![
                check_mirror(s, th, &mut rng, cx.hbar, n, tol)?,
                mirror_restriction_check(s, th, &mut rng, cx.hbar, n, tol, &c)?,
            ]
        }
        Suite::ClosedForm => vec![check_closed_form(s, variants)?],
        Suite::Degrees => vec![degrees_report(s)?],
        Suite::Langlands => vec![check_langlands(s, th, &mut rng, cx.hbar, n, tol)?],
        Suite::All => unreachable!("expanded by the caller"),
    };
    Ok(reports)
}

/// Exact integer suite: one aggregated line over every comparable pair.
fn degrees_report(s: &Setting) -> Result<CheckReport> {
    let g = &s.group;
    let mut report = CheckReport::new("logarithmic degree expansion");
    let mut checked = 0usize;
    let mut ok = true;
    let mut first_failure = None;
    for v in 0..g.order() {
        for w in 0..g.order() {
            if !bruhat_leq(g, w, v) {
                continue;
            }
            let pair = check_degree_expansion(&s.datum, g, v, w)?;
            checked += 1;
            if !pair.pass && first_failure.is_none() {
                ok = false;
                first_failure = Some(format!(
                    "(v, w) = ({}, {})",
                    word_label(&g.elem(v).word_one_based()),
                    word_label(&g.elem(w).word_one_based())
                ));
            }
        }
    }
    let identity = match first_failure {
        None => format!("rank-one expansion holds at all {checked} comparable pairs"),
        Some(at) => format!("rank-one expansion fails, first at {at}"),
    };
    report.push_exact(identity, ok);
    Ok(report)
}

#[derive(Serialize)]
struct PointEcho {
    z: Vec<[f64; 2]>,
    lambda: Vec<[f64; 2]>,
    hbar: [f64; 2],
}

impl PointEcho {
    fn new(p: &EvaluationPoint) -> Self {
        PointEcho {
            z: p.z.iter().map(|c| [c.re, c.im]).collect(),
            lambda: p.lambda.iter().map(|c| [c.re, c.im]).collect(),
            hbar: [p.hbar.re, p.hbar.im],
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum MatrixResult<'a> {
    Symbolic {
        kind: &'a str,
        variant: String,
        entries: &'a [Vec<Coefficient>],
    },
    Numeric {
        kind: &'a str,
        variant: String,
        sample_point: PointEcho,
        inverse_residual: f64,
        entries: Vec<Vec<[f64; 2]>>,
    },
}

fn cmd_matrix(args: MatrixArgs) -> Result<bool> {
    let cx = build_context(&args.common)?;
    let variant = OperatorVariant::parse(&args.variant)?;
    let a = a_matrix(&cx.setting, variant)?;

    let mut config = config_echo(&cx, "matrix");
    config.variant = Some(variant.token());

    let text = match args.which {
        MatrixKind::A => {
            config.which = Some("a".into());
            let results = MatrixResult::Symbolic {
                kind: "a",
                variant: variant.token(),
                entries: &a.entries,
            };
            let doc = Document { config, datum: datum_info(&cx), results };
            match cx.common.output_format {
                OutputFormat::Json => to_json(&doc)?,
                OutputFormat::Csv => {
                    let g = &cx.setting.group;
                    let mut text = String::from("row,col,coefficient\n");
                    for (v, row) in a.entries.iter().enumerate() {
                        for (w, coeff) in row.iter().enumerate() {
                            if coeff.is_zero() {
                                continue;
                            }
                            text.push_str(&format!(
                                "{},{},{}\n",
                                word_label(&g.elem(v).word_one_based()),
                                word_label(&g.elem(w).word_one_based()),
                                csv_quote(&coeff.describe())
                            ));
                        }
                    }
                    text
                }
            }
        }
        MatrixKind::B => {
            config.which = Some("b".into());
            let mut rng = suite_rng(cx.common.seed, "matrix-b");
            let (point, b, residual) = sample_b_matrix(&cx, &a, &mut rng)?;
            let results = MatrixResult::Numeric {
                kind: "b",
                variant: variant.token(),
                sample_point: PointEcho::new(&point),
                inverse_residual: residual,
                entries: b.iter()
                    .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                    .collect(),
            };
            let doc = Document { config, datum: datum_info(&cx), results };
            match cx.common.output_format {
                OutputFormat::Json => to_json(&doc)?,
                OutputFormat::Csv => {
                    let g = &cx.setting.group;
                    let mut text = String::from("row,col,re,im\n");
                    for (v, row) in b.iter().enumerate() {
                        for (w, val) in row.iter().enumerate() {
                            text.push_str(&format!(
                                "{},{},{:e},{:e}\n",
                                word_label(&g.elem(v).word_one_based()),
                                word_label(&g.elem(w).word_one_based()),
                                val.re,
                                val.im
                            ));
                        }
                    }
                    text
                }
            }
        }
    };
    emit(&text, &cx.common.out)?;
    Ok(true)
}

/// Draws points until the triangular inversion succeeds (at most ten); the
/// recorded residual is the sup-norm of a*b - 1 at the chosen point.
fn sample_b_matrix(
    cx: &RunContext,
    a: &elldl::dl_operators::AMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<(EvaluationPoint, Vec<Vec<Complex64>>, f64)> {
    let n = a.order();
    let mut last_err = None;
    for _ in 0..10 {
        let point =
            EvaluationPoint::random_with_hbar(rng, cx.setting.rank(), &cx.theta, cx.hbar);
        let attempt = (|| {
            let b = b_matrix_numeric(a, &point, &cx.theta)?;
            let mut cache = EvalCache::new(&cx.theta, &point);
            let av = eval_a_matrix(a, &mut cache)?;
            let mut residual = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (k, bk) in b.iter().enumerate() {
                        s += av[i][k] * bk[j];
                    }
                    if i == j {
                        s -= Complex64::new(1.0, 0.0);
                    }
                    residual = residual.max(s.norm());
                }
            }
            Ok((b, residual))
        })();
        match attempt {
            Ok((b, residual)) => return Ok((point, b, residual)),
            Err(e @ Error::Pole { .. }) | Err(e @ Error::Numeric(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Numeric("sampling failed".into())))
}

fn cmd_classes(args: ClassesArgs) -> Result<bool> {
    let cx = build_context(&args.common)?;
    let variant = OperatorVariant::parse(&args.variant)?;
    let c = SectionChoice::unit();
    let mut rng = suite_rng(cx.common.seed, "classes");

    let mut table_and_point: Option<(RestrictionTable, EvaluationPoint)> = None;
    let mut last_err = None;
    for _ in 0..10 {
        let point =
            EvaluationPoint::random_with_hbar(&mut rng, cx.setting.rank(), &cx.theta, cx.hbar);
        match restriction_table(&cx.setting, variant, &c, &point, &cx.theta) {
            Ok(table) => {
                table_and_point = Some((table, point));
                break;
            }
            Err(e @ Error::Pole { .. }) | Err(e @ Error::Numeric(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let (table, point) = match table_and_point {
        Some(pair) => pair,
        None => return Err(last_err.unwrap_or_else(|| Error::Numeric("sampling failed".into()))),
    };

    let mut config = config_echo(&cx, "classes");
    config.variant = Some(variant.token());
    config.section = Some("unit".into());

    #[derive(Serialize)]
    struct ClassesResult {
        sample_point: PointEcho,
        table: RestrictionTable,
    }

    let results = ClassesResult { sample_point: PointEcho::new(&point), table };
    let doc = Document { config, datum: datum_info(&cx), results };
    let text = match cx.common.output_format {
        OutputFormat::Json => to_json(&doc)?,
        OutputFormat::Csv => {
            let mut text = String::from("v,w,coefficient,re,im\n");
            for row in &doc.results.table.rows {
                for entry in &row.entries {
                    text.push_str(&format!(
                        "{},{},{},{:e},{:e}\n",
                        word_label(&row.v),
                        word_label(&entry.w),
                        csv_quote(&entry.coefficient),
                        entry.value.0,
                        entry.value.1
                    ));
                }
            }
            text
        }
    };
    emit(&text, &cx.common.out)?;
    Ok(true)
}
