//! `shocklab`: tables, moments and simulations for the shock-front one-point law.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use output::{grid, parse_range, Cell, RunManifest, Sink, Table};
use shocklab::dist::{self, GaOptions};
use shocklab::lpp::{check_identity, sample_l_resc, LppConfig};
use shocklab::selftest;
use shocklab::stats::{ks_distance, ks_distance_lattice, summarize};
use shocklab::tasep::{fluctuation_scale, rescale, simulate, SimConfig};
use shocklab::Error;

#[derive(Parser)]
#[command(name = "shocklab", version, about = "One-point law at a TASEP shock: determinants and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of G_a(s) with error estimates.
    GaTable(GaTableArgs),
    /// Mean, variance, skewness and kurtosis of G_a or of F_1(2s)^2.
    Moments(MomentsArgs),
    /// D(a) = max |F_1(2s)^2 - G_a(s)| over s = -2, -1.9, ..., 2.
    Dmax(DmaxArgs),
    /// Check G_a(s) >= G_a'(s) for a < a' and G_a(s) >= F_1(2s)^2.
    ScanMonotone(ScanArgs),
    /// Rescaled position of one TASEP particle.
    SimTasep(TasepArgs),
    /// Rescaled last-passage time to the corresponding cell.
    SimLpp(LppArgs),
    /// Monte Carlo check of P(x_n(t) >= m - n) = P(L <= t).
    CheckIdentity(IdentityArgs),
    /// Fast engine invariants.
    Selftest,
}

#[derive(Args, Serialize)]
struct GaTableArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    s_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    s_max: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Fixed quadrature size instead of adaptive doubling.
    #[arg(long)]
    nodes: Option<usize>,
    /// Evaluate past the reliability check; the output is flagged.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("which").required(true).args(["a", "reference"])))]
struct MomentsArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Moments of F_1(2s)^2 instead.
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DmaxArgs {
    /// lo:hi:step
    #[arg(long, default_value = "0:1.8:0.3", allow_hyphen_values = true)]
    a_list: String,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    /// lo:hi:step
    #[arg(long, default_value = "0:1.8:0.3", allow_hyphen_values = true)]
    a_list: String,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    s_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    s_max: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct TasepArgs {
    #[arg(long)]
    t: f64,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LppArgs {
    #[arg(long)]
    ell: u64,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v: f64,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct IdentityArgs {
    #[arg(long)]
    n: i64,
    #[arg(long)]
    m: i64,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(String),
    Io(std::io::Error),
    Lib(Error),
    /// Ran fine but a check failed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) | Failure::Lib(Error::Domain(_)) => 2,
            Failure::Lib(Error::Reliability(_)) => 3,
            Failure::Lib(_) | Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Check(m) => m.clone(),
            Failure::Io(e) => format!("i/o error: {e}"),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Writes the main table, an optional summary and the manifest.
fn finish(
    sink: &Sink,
    command: &str,
    params: &impl Serialize,
    seed: Option<u64>,
    started: String,
    table: &Table,
    summary: Option<(Table, Value)>,
) -> Outcome {
    sink.write(table)?;
    let summary_json = match summary {
        Some((t, v)) => {
            sink.write_side("summary.csv", &t)?;
            Some(v)
        }
        None => None,
    };
    sink.write_manifest(&RunManifest {
        command: command.to_string(),
        parameters: serde_json::to_value(params).map_err(std::io::Error::other)?,
        versions: json!({ "shocklab": env!("CARGO_PKG_VERSION") }),
        seed,
        started,
        finished: now(),
        summary: summary_json,
    })?;
    Ok(())
}

/// One-row table and the same data as JSON.
fn summary_of(fields: Vec<(&'static str, Cell)>) -> (Table, Value) {
    let header: Vec<&'static str> = fields.iter().map(|f| f.0).collect();
    let json: serde_json::Map<String, Value> = fields
        .iter()
        .map(|(k, c)| {
            let v = match c {
                Cell::F(x) if x.is_finite() => json!(x),
                Cell::F(x) => json!(x.to_string()),
                Cell::I(n) => json!(n),
                Cell::B(b) => json!(b),
                Cell::S(s) => json!(s),
            };
            (k.to_string(), v)
        })
        .collect();
    let mut t = Table::new(&header);
    t.push(fields.into_iter().map(|f| f.1).collect());
    (t, Value::Object(json))
}

fn ga_table(args: GaTableArgs) -> Outcome {
    let started = now();
    let s_grid = grid(args.s_min, args.s_max, args.step).map_err(Failure::Usage)?;
    if args.nodes.is_some_and(|n| n < 2) {
        return Err(Failure::Usage("--nodes must be at least 2".into()));
    }
    let opts = GaOptions { force: args.force, nodes: args.nodes, ..GaOptions::default() };
    let table = dist::ga_table_with(args.a, &s_grid, &opts)?;
    if table.flagged {
        eprintln!("warning: a = {} is past the reliability check; values are flagged", args.a);
    }
    let mut out = Table::new(&["s", "G_a", "err"]);
    for i in 0..s_grid.len() {
        out.push(vec![Cell::F(table.s_values[i]), Cell::F(table.cdf[i]), Cell::F(table.err[i])]);
    }
    let summary = summary_of(vec![("a", Cell::F(args.a)), ("flagged", Cell::B(table.flagged))]);
    finish(&Sink { path: args.out.clone() }, "ga-table", &args, None, started, &out, Some(summary))
}

fn moments(args: MomentsArgs) -> Outcome {
    let started = now();
    let (a, fit) = match args.a {
        Some(a) => (a, dist::ga_moments(a, &GaOptions::default())?),
        None => (f64::INFINITY, dist::reference_moments()?),
    };
    let m = fit.summary;
    let mut out = Table::new(&["a", "mean", "variance", "skewness", "kurtosis", "support_lo", "support_hi", "degree"]);
    out.push(vec![
        Cell::F(a),
        Cell::F(m.mean),
        Cell::F(m.variance),
        Cell::F(m.skewness),
        Cell::F(m.kurtosis),
        Cell::F(fit.support.0),
        Cell::F(fit.support.1),
        Cell::I(fit.degree as i64),
    ]);
    finish(&Sink { path: args.out.clone() }, "moments", &args, None, started, &out, None)
}

fn dmax(args: DmaxArgs) -> Outcome {
    let started = now();
    let a_list = parse_range(&args.a_list).map_err(Failure::Usage)?;
    let s_grid = dist::dmax_grid();
    let reference = dist::reference_table(&s_grid)?;
    let mut out = Table::new(&["a", "D", "argmax", "error"]);
    for &a in &a_list {
        let d = dist::dmax_from(&dist::ga_table(a, &s_grid)?, &reference);
        out.push(vec![Cell::F(a), Cell::F(d.value), Cell::F(d.argmax), Cell::F(d.error)]);
    }
    finish(&Sink { path: args.out.clone() }, "dmax", &args, None, started, &out, None)
}

fn scan_monotone(args: ScanArgs) -> Outcome {
    let started = now();
    let a_list = parse_range(&args.a_list).map_err(Failure::Usage)?;
    let s_grid = grid(args.s_min, args.s_max, args.step).map_err(Failure::Usage)?;
    let report = dist::monotonicity_scan(&a_list, &s_grid)?;
    let mut out = Table::new(&["a", "a_prime", "s", "difference", "slack", "violation"]);
    for c in &report.comparisons {
        out.push(vec![
            Cell::F(c.lower_a),
            Cell::F(c.upper_a),
            Cell::F(c.s),
            Cell::F(c.difference),
            Cell::F(c.slack),
            Cell::B(c.violated),
        ]);
    }
    let violations = report.violations().count();
    let summary = summary_of(vec![
        ("comparisons", Cell::I(report.comparisons.len() as i64)),
        ("violations", Cell::I(violations as i64)),
    ]);
    finish(&Sink { path: args.out.clone() }, "scan-monotone", &args, None, started, &out, Some(summary))?;
    if violations > 0 {
        return Err(Failure::Check(format!("{violations} monotonicity violations")));
    }
    Ok(())
}

fn sim_tasep(args: TasepArgs) -> Outcome {
    let started = now();
    let config = SimConfig::new(args.t, args.a, args.u, args.reps, args.seed);
    let sim = simulate(&config)?;
    let xs = rescale(&sim.positions, &config)?;
    let mut out = Table::new(&["X"]);
    for &x in &xs {
        out.push(vec![Cell::F(x)]);
    }
    let c = 2f64.cbrt();
    let fit = dist::marginal_fit(args.a, args.u)?;
    let cdf = |x: f64| fit.eval(x / c);
    let s = summarize(&xs);
    let summary = summary_of(vec![
        ("count", Cell::I(s.count as i64)),
        ("flagged", Cell::I(sim.flagged as i64)),
        ("alpha", Cell::F(sim.alpha)),
        ("n", Cell::I(sim.map.n_of_u)),
        ("x", Cell::I(sim.map.x_of_u)),
        ("mean", Cell::F(s.mean)),
        ("variance", Cell::F(s.variance)),
        ("stderr", Cell::F(s.stderr)),
        ("ks_lattice", Cell::F(ks_distance_lattice(&xs, 1.0 / fluctuation_scale(args.t), 0.0, cdf))),
        ("ks_raw", Cell::F(ks_distance(&xs, cdf))),
    ]);
    finish(&Sink { path: args.out.clone() }, "sim-tasep", &args, Some(args.seed), started, &out, Some(summary))
}

fn sim_lpp(args: LppArgs) -> Outcome {
    let started = now();
    let config = LppConfig::new(args.ell, args.v, args.a, args.reps, args.seed);
    let run = sample_l_resc(&config)?;
    let g = run.geometry;
    let mut out = Table::new(&["L_resc"]);
    for &x in &run.samples {
        out.push(vec![Cell::F(x)]);
    }
    let c = 2f64.cbrt();
    let fit = dist::marginal_fit(args.a, g.v_effective)?;
    let s = summarize(&run.samples);
    let summary = summary_of(vec![
        ("count", Cell::I(s.count as i64)),
        ("m", Cell::I(g.m)),
        ("alpha", Cell::F(g.alpha)),
        ("v_effective", Cell::F(g.v_effective)),
        ("mean", Cell::F(s.mean)),
        ("variance", Cell::F(s.variance)),
        ("stderr", Cell::F(s.stderr)),
        ("ks", Cell::F(ks_distance(&run.samples, |x| fit.eval(x / c)))),
    ]);
    finish(&Sink { path: args.out.clone() }, "sim-lpp", &args, Some(args.seed), started, &out, Some(summary))
}

fn identity(args: IdentityArgs) -> Outcome {
    let started = now();
    let r = check_identity(args.n, args.m, args.t, args.alpha, args.reps, args.seed)?;
    let mut out = Table::new(&[
        "n",
        "m",
        "t",
        "alpha",
        "replicates",
        "p_tasep",
        "p_lpp",
        "difference",
        "stderr",
        "exact",
        "passed",
    ]);
    out.push(vec![
        Cell::I(r.n),
        Cell::I(r.m),
        Cell::F(r.t),
        Cell::F(r.alpha),
        Cell::I(r.replicates as i64),
        Cell::F(r.p_tasep),
        Cell::F(r.p_lpp),
        Cell::F(r.difference),
        Cell::F(r.stderr),
        r.exact.map_or(Cell::S(String::new()), Cell::F),
        Cell::B(r.passed),
    ]);
    finish(&Sink { path: args.out.clone() }, "check-identity", &args, Some(args.seed), started, &out, None)?;
    if !r.passed {
        return Err(Failure::Check(format!("difference {:e} exceeds 3 standard errors", r.difference)));
    }
    Ok(())
}

fn run_selftest() -> Outcome {
    let results = selftest::run_all();
    for r in &results {
        println!("{} {:<22} {:>7.2}s  {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} suites failed")));
    }
    Ok(())
}

fn configure_threads() -> Outcome {
    let Ok(text) = std::env::var("SHOCKLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("SHOCKLAB_THREADS must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::GaTable(a) => ga_table(a),
        Command::Moments(a) => moments(a),
        Command::Dmax(a) => dmax(a),
        Command::ScanMonotone(a) => scan_monotone(a),
        Command::SimTasep(a) => sim_tasep(a),
        Command::SimLpp(a) => sim_lpp(a),
        Command::CheckIdentity(a) => identity(a),
        Command::Selftest => run_selftest(),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
