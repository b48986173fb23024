use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use batchida::bench::{self, DomainChoice, HeuristicOptions, OutputOptions, RunOptions, RunSpec, SearchOptions, TimeoutUs};
use batchida::formats::{encode_pdb, format_instance, write_atomic, AnyInstance};
use batchida::suites;
use batchida_core::{build_pdb, predict_balance, HeuristicError, PatternSpace, RubiksCube, SlidingTile};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "batchida", version, about = "Batched parallel IDA* search and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm x configuration grid over an instance set.
    Run(Box<RunArgs>),
    /// Build a pattern database and write it as BPDB1.
    BuildPdb(BuildPdbArgs),
    /// Predict whether table lookups or the evaluator dominate a batch.
    Balance(BalanceArgs),
    /// Generate a seeded instance file.
    GenInstances(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with defaults; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// stp2..stp5 or rc.
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated: idastar, aidastar, batch-idastar, batch-astar, bfs.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    threads: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    work_num: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    batch_size: Option<Vec<usize>>,
    /// Partial-flush timeouts in microseconds, or `none`.
    #[arg(long, value_delimiter = ',')]
    timeout_us: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    evaluators: Option<Vec<usize>>,
    /// `auto` or a depth.
    #[arg(long)]
    d_init: Option<String>,
    /// auto, zero, manhattan, pdb:<file>[+<file>][@div<k>|@mod<k>], linear:<file>[@<q>].
    #[arg(long)]
    heuristic: Option<String>,
    #[arg(long)]
    latency_per_call_us: Option<u64>,
    #[arg(long)]
    latency_per_item_ns: Option<u64>,
    /// A file, a suite (stp3, rc, korf10), uniform:<count> or walk:<count>:<min>-<max>.
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// Results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration batch CSV.
    #[arg(long)]
    iter_out: Option<PathBuf>,
    #[arg(long)]
    no_pruning: bool,
    /// Disable flushing when every searcher waits on its evaluator.
    #[arg(long)]
    no_stall_flush: bool,
}

impl RunArgs {
    fn options(self) -> Result<(Option<PathBuf>, RunOptions), bench::BenchError> {
        let timeout_us = self
            .timeout_us
            .map(|v| v.iter().map(|t| t.parse::<TimeoutUs>()).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        let opts = RunOptions {
            domain: self.domain,
            instances: self.instances,
            algo: self.algo,
            seed: self.seed,
            time_limit_s: self.time_limit_s,
            search: SearchOptions {
                threads: self.threads,
                work_num: self.work_num,
                batch_size: self.batch_size,
                timeout_us,
                evaluators: self.evaluators,
                d_init: self.d_init,
                pruning: self.no_pruning.then_some(false),
                flush_on_stall: self.no_stall_flush.then_some(false),
            },
            heuristic: HeuristicOptions {
                spec: self.heuristic,
                latency_per_call_us: self.latency_per_call_us,
                latency_per_item_ns: self.latency_per_item_ns,
            },
            output: OutputOptions { out: self.out, iter_out: self.iter_out },
        };
        Ok((self.config, opts))
    }
}

#[derive(Args)]
struct BuildPdbArgs {
    #[arg(long)]
    domain: String,
    /// Comma-separated labels: tiles (0 is the blank) or cube corners.
    #[arg(long, value_delimiter = ',', required = true)]
    pattern: Vec<u8>,
    #[arg(long)]
    out: PathBuf,
    /// Largest table, in one-byte entries, that may be built.
    #[arg(long, default_value_t = 1 << 30)]
    max_entries: u64,
}

#[derive(Args)]
struct BalanceArgs {
    /// Batch size.
    #[arg(long)]
    b_nn: u64,
    /// Search threads.
    #[arg(long)]
    threads: u64,
    /// One table lookup, nanoseconds.
    #[arg(long)]
    t_pdb_ns: u64,
    /// One evaluator call, microseconds.
    #[arg(long)]
    t_nn_us: u64,
    /// One host/device copy, microseconds.
    #[arg(long, default_value_t = 0)]
    t_copy_us: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random-walk lengths `min-max`; tile puzzles are sampled uniformly
    /// when omitted.
    #[arg(long)]
    walk: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::BuildPdb(args) => build(args),
        Command::Balance(args) => balance(args),
        Command::GenInstances(args) => generate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn run(args: RunArgs) -> CmdResult {
    let (config, flags) = args.options()?;
    let opts = match config {
        Some(path) => flags.over(RunOptions::load(&path)?),
        None => flags,
    };
    let spec = RunSpec::try_from(opts)?;
    let summary = bench::run(&spec, &mut std::io::stdout())?;
    eprintln!("{} runs, {} timeouts, {} errors", summary.rows.len(), summary.timeouts(), summary.errors());
    Ok(if summary.errors() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn build(args: BuildPdbArgs) -> CmdResult {
    match args.domain.parse::<DomainChoice>()? {
        DomainChoice::Stp(n) => build_for(&SlidingTile::new(n)?, &args),
        DomainChoice::Cube => build_for(&RubiksCube, &args),
    }
}

fn build_for<D: PatternSpace>(domain: &D, args: &BuildPdbArgs) -> CmdResult {
    let table = build_pdb(domain, &args.pattern, &domain.goal(), args.max_entries).map_err(|e| match e {
        HeuristicError::TooLarge { required, cap } => {
            format!("table needs {required} bytes, over the --max-entries cap of {cap}").into()
        }
        e => Box::<dyn std::error::Error>::from(e.to_string()),
    })?;
    write_atomic(&args.out, &encode_pdb(&table))?;
    println!("entries={} max_depth={} out={}", table.len(), table.max_depth(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn balance(args: BalanceArgs) -> CmdResult {
    let report = predict_balance(
        args.b_nn,
        args.threads,
        Duration::from_nanos(args.t_pdb_ns),
        Duration::from_micros(args.t_nn_us),
        Duration::from_micros(args.t_copy_us),
    )?;
    println!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenArgs) -> CmdResult {
    let domain = args.domain.parse::<DomainChoice>()?;
    let walk = args
        .walk
        .as_deref()
        .map(|w| {
            let (a, b) = w.split_once('-').unwrap_or((w, w));
            match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) if a <= b => Ok((a, b)),
                _ => Err(format!("bad --walk '{w}' (expected MIN-MAX)")),
            }
        })
        .transpose()?;
    let list: Vec<AnyInstance> = match (domain, walk) {
        (DomainChoice::Stp(n), None) => suites::uniform_stp(n, args.count, args.seed).into_iter().map(AnyInstance::Stp).collect(),
        (DomainChoice::Stp(n), Some((lo, hi))) => {
            suites::walks(&SlidingTile::new(n)?, args.count, lo, hi, args.seed).into_iter().map(AnyInstance::Stp).collect()
        }
        (DomainChoice::Cube, walk) => {
            let (lo, hi) = walk.ok_or("cube instances need --walk MIN-MAX")?;
            suites::cube_walks(args.count, lo, hi, args.seed).into_iter().map(AnyInstance::Cube).collect()
        }
    };
    let mut text = format!("# {} instances, domain {}, seed {}\n", list.len(), domain.name(), args.seed);
    for inst in &list {
        text.push_str(&format_instance(inst));
        text.push('\n');
    }
    write_atomic(&args.out, text.as_bytes())?;
    println!("wrote {} instances to {}", list.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
