//! Command-line front end: single solves and updates plus the four
//! experiments, all writing CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chebppr::experiments::{
    run_exp1, run_exp2, run_exp3, run_exp4, run_solve, run_update, Exp1Config, Exp2Config,
    Exp3Config, Exp4Config, SolveConfig, SolveOutput, Stop, Workload,
};
use chebppr::ingest::{parse_edge_file, reverse_time, SnapshotStream};
use chebppr::synthetic::{synthetic_stream, SyntheticRecipe};
use chebppr::{mu_from_alpha, Error, OperatorKind, PowerIterationConfig, DEFAULT_MAX_PUSHES};

#[derive(Debug, Parser)]
#[command(
    name = "chebppr",
    version,
    about = "Personalized PageRank on evolving graphs with local Chebyshev updates",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve from scratch on one snapshot; rows per order.
    Solve(SolveArgs),
    /// Update exact scores from one snapshot to a later one; rows per order.
    Update(SolveArgs),
    /// Error against messages for update and scratch after a small perturbation.
    Exp1(Exp1Args),
    /// Messages to reach an error target as the perturbation grows.
    Exp2(Exp2Args),
    /// Chebyshev update against RWR and push over error targets.
    Exp3(Exp3Args),
    /// Tracking along a snapshot sequence with a fixed order.
    Exp4(Exp4Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OperatorArg {
    Standard,
    Gamma,
    Iterated,
    Dual,
    GammaDual,
    Recentered,
}

#[derive(Debug, Args)]
struct Common {
    /// Timestamped edge list, optionally gzip-compressed.
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Synthetic stream recipe, `pa,N,M` or `geo,N,RADIUS`.
    #[arg(long, value_name = "MODEL,N,PARAM")]
    synthetic: Option<String>,
    /// Seed of the synthetic generator; defaults to the RNG seed.
    #[arg(long, value_name = "S")]
    graph_seed: Option<u64>,
    /// Walk continuation probability α (restart probability 1 − α). Defaults to 0.5.
    #[arg(long, value_name = "F", conflicts_with = "mu")]
    alpha: Option<f64>,
    /// Helmholtz shift μ = (1 − α)/α, instead of `--alpha`.
    #[arg(long, value_name = "F")]
    mu: Option<f64>,
    #[arg(long, value_enum, default_value = "standard")]
    operator: OperatorArg,
    #[arg(long, value_name = "F", default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_name = "F", default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, value_name = "INT", default_value_t = 2)]
    m: u32,
    /// Number of seed nodes (restart realizations).
    #[arg(long, value_name = "COUNT")]
    seeds: Option<usize>,
    /// Fixed seed node, by its id in the input.
    #[arg(long, value_name = "ID")]
    seed_node: Option<u64>,
    /// Seed for seed-node sampling.
    #[arg(long, value_name = "S", required = true)]
    rng_seed: u64,
    /// Snapshot window `I:J` (or `I`); snapshots count from 1.
    #[arg(long, value_name = "I:J", value_parser = parse_window)]
    window: Option<Window>,
    /// Replay the stream backwards so edges are deleted.
    #[arg(long)]
    reverse_time: bool,
    /// Group events into snapshots of this many events instead of by timestamp.
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Message activity threshold.
    #[arg(long, value_name = "F", default_value_t = 0.0)]
    tau_msg: f64,
    #[arg(long, value_name = "N", default_value_t = chebppr::DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    /// Power-iteration cap for spectral bounds of non-standard operators.
    #[arg(long, value_name = "N", default_value_t = PowerIterationConfig::default().max_iterations)]
    power_iterations: usize,
    /// CSV output; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// File of `key=value` lines mirroring these flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "K", conflicts_with = "target", required_unless_present = "target")]
    order: Option<usize>,
    #[arg(long, value_name = "ERR")]
    target: Option<f64>,
    /// Order cap when running to a target.
    #[arg(long, value_name = "K", default_value_t = 300)]
    max_order: usize,
    /// Final score vector; defaults to `<out>.vector.csv` when `--out` is set.
    #[arg(long, value_name = "PATH")]
    vector_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Exp1Args {
    #[command(flatten)]
    common: Common,
    /// Largest order swept.
    #[arg(long, value_name = "K", default_value_t = 40)]
    order: usize,
}

#[derive(Debug, Args)]
struct Exp2Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "ERR", default_value_t = 1e-10)]
    target: f64,
    /// Perturbation sizes as fractions of the starting edge count.
    #[arg(long, value_name = "F,..", value_delimiter = ',')]
    sizes: Option<Vec<f64>>,
    #[arg(long, value_name = "K", default_value_t = 300)]
    max_order: usize,
}

#[derive(Debug, Args)]
struct Exp3Args {
    #[command(flatten)]
    common: Common,
    /// A single error target.
    #[arg(long, value_name = "ERR", conflicts_with = "targets")]
    target: Option<f64>,
    /// Error targets to sweep.
    #[arg(long, value_name = "ERR,..", value_delimiter = ',')]
    targets: Option<Vec<f64>>,
    #[arg(long, value_name = "K", default_value_t = 300)]
    max_order: usize,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_PUSHES)]
    max_pushes: u64,
}

#[derive(Debug, Args)]
struct Exp4Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "K", default_value_t = 15)]
    order: usize,
    /// Snapshots tracked after the start; overridden by a window end.
    #[arg(long, value_name = "N", default_value_t = 100)]
    horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Window {
    start: usize,
    end: Option<usize>,
}

fn parse_window(text: &str) -> Result<Window, String> {
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad snapshot index '{s}'"));
    match text.split_once(':') {
        Some((a, b)) => Ok(Window {
            start: parse(a)?,
            end: Some(parse(b)?),
        }),
        None => Ok(Window {
            start: parse(text)?,
            end: None,
        }),
    }
}

/// Failures with the exit code they map to.
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let hint = match e {
            Error::PowerIterationNotConverged { .. } => " (raise --power-iterations)",
            _ => "",
        };
        if e.is_numerical() {
            Failure::Numerical(format!("{e}{hint}"))
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match expand_config(std::env::args().collect()) {
        Ok(args) => args,
        Err(failure) => return report(failure),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => report(failure),
    }
}

fn report(failure: Failure) -> ExitCode {
    match failure {
        Failure::Config(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Failure::Numerical(msg) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Splices `key=value` lines from a `--config` file in right after the
/// subcommand, so flags given on the command line take precedence.
fn expand_config(args: Vec<String>) -> Outcome<Vec<String>> {
    let mut path = None;
    for (i, arg) in args.iter().enumerate() {
        if arg == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
    let mut flags = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').unwrap_or((line, ""));
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        if key.is_empty() || key == "config" {
            return Err(Failure::Config(format!(
                "{}:{}: expected key=value",
                path.display(),
                number + 1
            )));
        }
        match value {
            "" | "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    let at = 2.min(args.len());
    let mut out = args[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Solve(a) => solve_like(a, false),
        Command::Update(a) => solve_like(a, true),
        Command::Exp1(a) => {
            let work = workload(&a.common)?;
            let (old, new) = pair_window(&a.common, &work)?;
            let cfg = Exp1Config {
                old,
                new,
                max_order: a.order,
                kinds: vec![work.kind],
            };
            write_rows(&a.common.out, &run_exp1(&work, &cfg)?)
        }
        Command::Exp2(a) => {
            let mut work = workload(&a.common)?;
            let (start, end) = start_window(&a.common);
            if let Some(end) = end {
                work.stream = work.stream.truncated(end)?;
            }
            let cfg = Exp2Config {
                start,
                sizes: a.sizes.unwrap_or_else(Exp2Config::default_sizes),
                target: a.target,
                max_order: a.max_order,
            };
            write_rows(&a.common.out, &run_exp2(&work, &cfg)?)
        }
        Command::Exp3(a) => {
            let work = workload(&a.common)?;
            let (old, new) = pair_window(&a.common, &work)?;
            let targets = match (a.target, a.targets) {
                (Some(t), _) => vec![t],
                (None, Some(ts)) => ts,
                (None, None) => Exp3Config::default_targets(),
            };
            let cfg = Exp3Config {
                old,
                new,
                targets,
                max_order: a.max_order,
                max_pushes: a.max_pushes,
            };
            write_rows(&a.common.out, &run_exp3(&work, &cfg)?)
        }
        Command::Exp4(a) => {
            let work = workload(&a.common)?;
            let (start, end) = start_window(&a.common);
            let horizon = match end {
                Some(end) if end < start => {
                    return Err(Failure::Config(format!("window end {end} is before its start {start}")))
                }
                Some(end) => end - start,
                None => a.horizon,
            };
            let cfg = Exp4Config {
                start,
                horizon,
                order: a.order,
            };
            write_rows(&a.common.out, &run_exp4(&work, &cfg)?)
        }
    }
}

fn solve_like(a: SolveArgs, update: bool) -> Outcome<()> {
    let mut work = workload(&a.common)?;
    if a.common.seeds.is_none() {
        work.seeds = 1;
    }
    let stop = match (a.order, a.target) {
        (Some(k), _) => Stop::Order(k),
        (None, Some(target)) => Stop::Target {
            target,
            max_order: a.max_order,
        },
        (None, None) => unreachable!("clap requires one of --order and --target"),
    };
    let out: SolveOutput = if update {
        let (old, new) = pair_window(&a.common, &work)?;
        run_update(&work, &SolveConfig { old, new, stop })?
    } else {
        let last = work.stream.snapshot_count();
        let new = match a.common.window {
            Some(Window { end: Some(end), .. }) => end,
            Some(Window { start, end: None }) => start,
            None => last,
        };
        run_solve(&work, &SolveConfig { old: new, new, stop })?
    };
    write_rows(&a.common.out, &out.rows)?;
    let vector_path = a.vector_out.or_else(|| {
        a.common.out.as_ref().map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("scores");
            p.with_file_name(format!("{stem}.vector.csv"))
        })
    });
    if let Some(path) = vector_path {
        #[derive(Serialize)]
        struct Entry {
            node: u64,
            score: f64,
        }
        let entries: Vec<Entry> = out
            .scores
            .iter()
            .enumerate()
            .map(|(u, &score)| Entry {
                node: work.stream.external_id(u).unwrap_or(u as u64),
                score,
            })
            .collect();
        write_rows(&Some(path), &entries)?;
    }
    Ok(())
}

fn load_stream(c: &Common) -> Outcome<SnapshotStream> {
    let stream = match (&c.input, &c.synthetic) {
        (Some(path), _) => parse_edge_file(path)?,
        (None, Some(recipe)) => {
            let recipe = SyntheticRecipe::parse(recipe, c.graph_seed.unwrap_or(c.rng_seed))?;
            synthetic_stream(&recipe)?
        }
        (None, None) => return Err(Failure::Config("one of --input or --synthetic is required".into())),
    };
    let stream = match c.batch_size {
        Some(size) => stream.rebatch(size)?,
        None => stream,
    };
    Ok(if c.reverse_time { reverse_time(&stream) } else { stream })
}

fn workload(c: &Common) -> Outcome<Workload> {
    let stream = load_stream(c)?;
    let mu = match (c.alpha, c.mu) {
        (_, Some(mu)) => mu,
        (Some(alpha), None) => mu_from_alpha(alpha)?,
        (None, None) => mu_from_alpha(0.5)?,
    };
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Failure::Config(format!("mu must be positive, got {mu}")));
    }
    let kind = match c.operator {
        OperatorArg::Standard => OperatorKind::Standard,
        OperatorArg::Gamma => OperatorKind::Gamma { gamma: c.gamma },
        OperatorArg::Iterated => OperatorKind::Iterated { m: c.m },
        OperatorArg::Dual => OperatorKind::Dual { sigma: c.sigma },
        OperatorArg::GammaDual => OperatorKind::GammaDual {
            gamma: c.gamma,
            sigma: c.sigma,
        },
        OperatorArg::Recentered => OperatorKind::Recentered,
    };
    let seed_node = match c.seed_node {
        None => None,
        Some(id) => Some(
            stream
                .external_ids()
                .iter()
                .position(|&e| e == id)
                .ok_or_else(|| Failure::Config(format!("seed node {id} does not occur in the input")))?,
        ),
    };
    let mut work = Workload::new(stream, c.rng_seed);
    work.kind = kind;
    work.mu = mu;
    work.tau = c.tau_msg;
    work.dense_limit = c.dense_limit;
    work.power = PowerIterationConfig {
        max_iterations: c.power_iterations,
        ..PowerIterationConfig::default()
    };
    work.seed_node = seed_node;
    if let Some(seeds) = c.seeds {
        work.seeds = seeds;
    }
    Ok(work)
}

/// `I:J` as given, `I` alone as `I:I+1`, nothing as `1:2`.
fn pair_window(c: &Common, work: &Workload) -> Outcome<(usize, usize)> {
    let (old, new) = match c.window {
        Some(Window { start, end: Some(end) }) => (start, end),
        Some(Window { start, end: None }) => (start, start + 1),
        None => (1, 2),
    };
    let count = work.stream.snapshot_count();
    if new > count {
        return Err(Error::SnapshotOutOfRange { index: new, count }.into());
    }
    Ok((old, new))
}

fn start_window(c: &Common) -> (usize, Option<usize>) {
    match c.window {
        Some(w) => (w.start, w.end),
        None => (1, None),
    }
}

fn write_rows<T: Serialize>(path: &Option<PathBuf>, rows: &[T]) -> Outcome<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(io::stdout().lock()),
    };
    let name = path.as_deref().unwrap_or(Path::new("<stdout>"));
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row).map_err(|e| io_failure(name, e))?;
    }
    writer.flush().map_err(|e| io_failure(name, e))
}
