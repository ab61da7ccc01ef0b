use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hyperks::bounds::{
    delta_bound, delta_closed_form, delta_upper_r, mss_bound, partition_bound, BoundQuery, Count,
};
use hyperks::hyperbolic::{FormSpec, HyperbolicForm, DEFAULT_RANK_TOL};
use hyperks::oracles::{default_families, sweep, Lemma, SweepConfig, SLACK_TOL};
use hyperks::partition::{
    greedy_partition, random_instance, validate_instance, Family, GreedyOptions, Instance,
    InstanceSpec,
};

mod error;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "hyperks", version, about = "Partition bounds for hyperbolic polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Input JSON file; `-` reads stdin.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Slack tolerance for `verify`, real-rootedness tolerance for `eigen`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Record wall time in partition reports; such reports are not byte-stable.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of δ(ε, m, r), its closed forms and the partition bounds.
    Bounds(BoundsArgs),
    /// Greedy partition of an instance file.
    Partition(PartitionArgs),
    /// Eigenvalues of points with respect to a form.
    Eigen(EigenArgs),
    /// Random sweeps of the correlation inequalities.
    Verify(VerifyArgs),
    /// Random instance generation.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Trace caps, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    eps: Vec<f64>,
    /// Vector counts (`inf` allowed).
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "inf")]
    m: Vec<String>,
    /// Rank caps (`inf` allowed).
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "inf")]
    r: Vec<String>,
    /// Part counts.
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "1")]
    k: Vec<u64>,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    /// Fix indices in an order shuffled by `--seed` instead of 0..m.
    #[arg(long)]
    shuffle: bool,
}

#[derive(Args, Debug)]
struct EigenArgs {
    /// Form shorthand such as `lorentz:3`; overrides the input file.
    #[arg(long)]
    form: Option<String>,
    /// Point coordinates, comma separated; overrides the input file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Lemmas to check, comma separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    lemma: Vec<String>,
    /// Form families as shorthands; the five built-in families by default.
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    #[arg(long, default_value_t = 200)]
    contexts: usize,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// `symdet:n`, `product:n` or `lorentz:n`.
    #[arg(long)]
    family: String,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Trace cap; the largest generated trace when absent.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    max_rank: usize,
    /// Even splits for the product family.
    #[arg(long)]
    equal: bool,
}

/// What a command produced, and whether its checks held.
struct Outcome {
    body: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(ok) => ExitCode::from(if ok { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    if let Some(j) = g.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = match &cli.command {
        Command::Bounds(a) => cmd_bounds(g, a)?,
        Command::Partition(a) => cmd_partition(g, a)?,
        Command::Eigen(a) => cmd_eigen(g, a)?,
        Command::Verify(a) => cmd_verify(g, a)?,
        Command::Gen(a) => cmd_gen(g, a)?,
    };
    emit(g, &out.body)?;
    Ok(out.ok)
}

fn emit(g: &Global, body: &str) -> Result<(), CliError> {
    match &g.output {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Io(p.display().to_string(), e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io("stdout".into(), e))
        }
    }
}

fn read_input(g: &Global) -> Result<(String, String), CliError> {
    let Some(path) = &g.input else {
        return Err(CliError::Usage("--input is required".into()));
    };
    let name = path.display().to_string();
    let mut text = String::new();
    if name == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(name.clone(), e))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| CliError::Io(name.clone(), e))?;
    }
    Ok((name, text))
}

fn parse_json<T: for<'de> Deserialize<'de>>(name: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(name.to_string(), e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct BoundsRow {
    eps: f64,
    m: Count,
    r: Count,
    k: u64,
    delta_numeric: f64,
    delta_closed: Option<f64>,
    delta_upper_a3: Option<f64>,
    mss: f64,
    partition_bound: f64,
}

const BOUNDS_COLUMNS: [&str; 9] = [
    "eps",
    "m",
    "r",
    "k",
    "delta_numeric",
    "delta_closed",
    "delta_upper_a3",
    "mss",
    "partition_bound",
];

fn parse_counts(xs: &[String]) -> Result<Vec<Count>, CliError> {
    xs.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Count>().map_err(CliError::from))
        .collect()
}

fn cmd_bounds(g: &Global, a: &BoundsArgs) -> Result<Outcome, CliError> {
    let (ms, rs) = (parse_counts(&a.m)?, parse_counts(&a.r)?);
    let mut rows = Vec::new();
    for &eps in &a.eps {
        for &m in &ms {
            for &r in &rs {
                for &k in &a.k {
                    rows.push(bounds_row(eps, m, r, k)?);
                }
            }
        }
    }
    let body = match g.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(BOUNDS_COLUMNS).map_err(CliError::Csv)?;
            let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            for r in &rows {
                w.write_record([
                    r.eps.to_string(),
                    r.m.to_string(),
                    r.r.to_string(),
                    r.k.to_string(),
                    r.delta_numeric.to_string(),
                    cell(r.delta_closed),
                    cell(r.delta_upper_a3),
                    r.mss.to_string(),
                    r.partition_bound.to_string(),
                ])
                .map_err(CliError::Csv)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?)
                .expect("csv output is utf-8")
        }
    };
    Ok(Outcome { body, ok: true })
}

fn bounds_row(eps: f64, m: Count, r: Count, k: u64) -> Result<BoundsRow, CliError> {
    let q = BoundQuery::new(eps, m, r)?;
    // outside its domain a closed form is simply absent
    let delta_closed = delta_closed_form(&q).ok().flatten();
    Ok(BoundsRow {
        eps,
        m,
        r,
        k,
        delta_numeric: delta_bound(&q)?.value,
        delta_closed,
        delta_upper_a3: (m == Count::Infinite).then(|| delta_upper_r(eps, r)),
        mss: mss_bound(eps, k),
        partition_bound: partition_bound(eps, m, r, k)?,
    })
}

fn cmd_partition(g: &Global, a: &PartitionArgs) -> Result<Outcome, CliError> {
    let (name, text) = read_input(g)?;
    let inst: Instance = parse_json(&name, &text)?;
    let check = validate_instance(&inst)?;
    if !check.passed {
        let failed: Vec<String> = check
            .failures()
            .iter()
            .map(|c| format!("{} (worst slack {:.3e} at vector {:?})", c.name, c.worst_slack, c.worst_index))
            .collect();
        return Err(CliError::Hypotheses(name, failed.join(", ")));
    }
    let opts = GreedyOptions {
        shuffle: a.shuffle.then_some(g.seed),
        timing: g.timing,
    };
    let rep = greedy_partition(&inst, &opts)?;
    let ok = rep.within_bound && rep.trajectory_nonincreasing;
    Ok(Outcome { body: to_json(&rep), ok })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenInput {
    form: FormSpec,
    #[serde(default)]
    x: Option<Vec<f64>>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct EigenPoint {
    x: Vec<f64>,
    eigenvalues: Vec<f64>,
    trace: f64,
    rank: usize,
    norm: f64,
    in_closed_cone: bool,
}

#[derive(Serialize)]
struct EigenReport {
    form: String,
    points: Vec<EigenPoint>,
}

fn cmd_eigen(g: &Global, a: &EigenArgs) -> Result<Outcome, CliError> {
    let (spec, points) = match (&a.form, &a.x) {
        (Some(f), Some(x)) => (FormSpec::parse_short(f)?, vec![x.clone()]),
        _ => {
            let (name, text) = read_input(g)?;
            let inp: EigenInput = parse_json(&name, &text)?;
            let mut points = inp.points;
            if let Some(x) = inp.x {
                points.insert(0, x);
            }
            let spec = match &a.form {
                Some(f) => FormSpec::parse_short(f)?,
                None => inp.form,
            };
            (spec, points)
        }
    };
    let mut form = HyperbolicForm::builtin(&spec)?;
    if let Some(t) = g.tol {
        form = form.with_tolerances(t, DEFAULT_RANK_TOL);
    }
    let points = points
        .into_iter()
        .map(|x| {
            let eigenvalues = form.eigenvalues(&x)?;
            Ok(EigenPoint {
                trace: eigenvalues.iter().sum(),
                rank: form.rank(&x)?,
                norm: eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs())),
                in_closed_cone: form.in_cone(&x, true, 1e-9)?,
                eigenvalues,
                x,
            })
        })
        .collect::<Result<Vec<_>, hyperks::Error>>()?;
    Ok(Outcome {
        body: to_json(&EigenReport { form: spec.label(), points }),
        ok: true,
    })
}

fn cmd_verify(g: &Global, a: &VerifyArgs) -> Result<Outcome, CliError> {
    let lemmas = if a.lemma.iter().any(|l| l.trim() == "all") {
        Lemma::ALL.to_vec()
    } else {
        a.lemma
            .iter()
            .map(|l| l.parse::<Lemma>())
            .collect::<Result<Vec<_>, _>>()?
    };
    let forms = if a.family.is_empty() {
        default_families()
    } else {
        a.family
            .iter()
            .map(|f| FormSpec::parse_short(f))
            .collect::<Result<Vec<_>, _>>()?
    };
    let cfg = SweepConfig {
        forms,
        lemmas,
        contexts: a.contexts,
        seed: g.seed,
        tol: g.tol.unwrap_or(SLACK_TOL),
    };
    let rep = sweep(&cfg)?;
    let ok = rep.total.failed == 0;
    Ok(Outcome { body: to_json(&rep), ok })
}

fn cmd_gen(g: &Global, a: &GenArgs) -> Result<Outcome, CliError> {
    let family = match FormSpec::parse_short(&a.family)? {
        FormSpec::Symdet { n } => Family::Symdet { n },
        FormSpec::Product { n } => Family::Product { n },
        FormSpec::Lorentz { n } => Family::Lorentz { n },
        other => {
            return Err(CliError::Usage(format!(
                "no instance generator for {}",
                other.label()
            )))
        }
    };
    let inst = random_instance(&InstanceSpec {
        family,
        m: a.m,
        k: a.k,
        eps: a.eps,
        max_rank: a.max_rank,
        seed: g.seed,
        equal: a.equal,
    })?;
    Ok(Outcome { body: to_json(&inst), ok: true })
}
