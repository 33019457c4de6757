use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fcamr::engine::{self, Algorithm, EngineConfig, Outcome, VerifyOptions};
use fcamr::io::{self as fio, DatasetStats, InputFormat, OutputFormat};
use fcamr::mr::{MrOptions, DEFAULT_MAX_ITERATIONS};
use fcamr::partition::{split, PartitionManifest, PartitionSet, SplitStrategy};
use fcamr::runtime::{worker, Mode, TransferStats};
use fcamr::{Error, FormalContext, Result};

const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "fcamr", version, about = "Formal concept enumeration, centralized and map-reduce")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate all concepts of a context.
    Enumerate(EnumerateArgs),
    /// Write a partition manifest for a context.
    Split(SplitArgs),
    /// Check every algorithm against the brute-force oracle.
    Verify(VerifyArgs),
    /// Time a matrix of algorithms, partition counts and worker counts.
    Bench(BenchArgs),
    /// Serve the runtime socket protocol until SHUTDOWN.
    Worker(WorkerArgs),
    /// Print object/attribute counts and density.
    Stats(InputArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Defaults to a guess from the extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Attribute count for FIMI input (default: one past the largest index).
    #[arg(long)]
    attributes: Option<usize>,
    /// Attribute order used for the lectic order.
    #[arg(long, value_enum, default_value = "file")]
    sort_attributes: SortArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Cxt,
    Fimi,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SortArg {
    File,
    /// Ascending support.
    Support,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Nextclosure,
    Cbo,
    Mrganter,
    #[value(name = "mrganter+")]
    MrganterPlus,
    Mrcbo,
    Oracle,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Nextclosure => Algorithm::NextClosure,
            AlgoArg::Cbo => Algorithm::Cbo,
            AlgoArg::Mrganter => Algorithm::MrGanter,
            AlgoArg::MrganterPlus => Algorithm::MrGanterPlus,
            AlgoArg::Mrcbo => Algorithm::MrCbo,
            AlgoArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Local,
    Socket,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum StrategyArg {
    Contiguous,
    RoundRobin,
}

impl From<StrategyArg> for SplitStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Contiguous => SplitStrategy::Contiguous,
            StrategyArg::RoundRobin => SplitStrategy::RoundRobin,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum OutFormatArg {
    JsonLines,
    Csv,
    CountOnly,
}

impl From<OutFormatArg> for OutputFormat {
    fn from(f: OutFormatArg) -> Self {
        match f {
            OutFormatArg::JsonLines => OutputFormat::JsonLines,
            OutFormatArg::Csv => OutputFormat::Csv,
            OutFormatArg::CountOnly => OutputFormat::CountOnly,
        }
    }
}

#[derive(Args, Clone)]
struct RuntimeArgs {
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    #[arg(long, value_enum, default_value = "contiguous")]
    strategy: StrategyArg,
    /// Partition manifest from `fcamr split`; overrides --partitions/--strategy.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Defaults to one per partition (or one per --workers-addr entry).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "local")]
    mode: ModeArg,
    /// Comma-separated host:port list of running workers. Without it socket
    /// mode launches local worker processes.
    #[arg(long, value_delimiter = ',')]
    workers_addr: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[command(flatten)]
    runtime: RuntimeArgs,
    /// Concept output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json_lines")]
    out_format: OutFormatArg,
    /// Run report JSON (default: stderr).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    partitions: usize,
    #[arg(long, value_enum, default_value = "contiguous")]
    strategy: StrategyArg,
    /// Manifest path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verify on this context instead of random ones (at most 20 attributes).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, default_value_t = 14)]
    max_attrs: usize,
    #[arg(long, default_value_t = 12)]
    max_objects: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run with a deliberately broken MRGanter (skips the lectic test).
    #[arg(long, hide = true)]
    inject_mutant: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nextclosure,mrganter+,mrcbo")]
    algos: Vec<AlgoArg>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    partitions: Vec<usize>,
    /// Worker counts; combinations with more workers than partitions are skipped.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, value_enum, default_value = "contiguous")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "local")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Report path; `.json` selects JSON, anything else CSV (default: CSV on stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WorkerArgs {
    #[arg(long)]
    listen: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Enumerate(a) => cmd_enumerate(a),
        Cmd::Split(a) => cmd_split(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Worker(a) => cmd_worker(a),
        Cmd::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fcamr: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load(args: &InputArgs) -> Result<FormalContext> {
    let format = args.format.map(|f| match f {
        FormatArg::Cxt => InputFormat::Cxt,
        FormatArg::Fimi => InputFormat::Fimi,
        FormatArg::Csv => InputFormat::Csv,
    });
    let ctx = fio::read_path(&args.input, format, args.attributes)?;
    Ok(match args.sort_attributes {
        SortArg::File => ctx,
        SortArg::Support => ctx.sorted_by_support(),
    })
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Local `fcamr worker` processes on ephemeral ports.
struct WorkerProcesses {
    children: Vec<Child>,
    addrs: Vec<String>,
}

impl WorkerProcesses {
    fn launch(count: usize) -> Result<Self> {
        let exe = std::env::current_exe()?;
        let mut procs = WorkerProcesses {
            children: Vec::new(),
            addrs: Vec::new(),
        };
        for _ in 0..count {
            let mut child = Command::new(&exe)
                .args(["worker", "--listen", "127.0.0.1:0"])
                .stdout(Stdio::piped())
                .stdin(Stdio::null())
                .spawn()?;
            let stdout = child.stdout.take().expect("piped stdout");
            procs.children.push(child);
            let mut line = String::new();
            BufReader::new(stdout).read_line(&mut line)?;
            let addr = line
                .trim()
                .strip_prefix("listening on ")
                .ok_or_else(|| Error::Config(format!("worker did not report an address: {line:?}")))?;
            procs.addrs.push(addr.to_string());
        }
        Ok(procs)
    }

    fn wait(mut self) {
        let deadline = Instant::now() + Duration::from_secs(5);
        for child in &mut self.children {
            while matches!(child.try_wait(), Ok(None)) && Instant::now() < deadline {
                std::thread::sleep(Duration::from_millis(10));
            }
        }
    }
}

impl Drop for WorkerProcesses {
    fn drop(&mut self) {
        for child in &mut self.children {
            if matches!(child.try_wait(), Ok(None)) {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
    }
}

/// Resolves mode flags into a runtime mode, launching workers if needed.
fn runtime_mode(mode: ModeArg, addrs: &[String], workers: usize) -> Result<(Mode, Option<WorkerProcesses>)> {
    match mode {
        ModeArg::Local => {
            if !addrs.is_empty() {
                return Err(Error::Config("--workers-addr needs --mode socket".into()));
            }
            Ok((Mode::InProcess, None))
        }
        ModeArg::Socket if addrs.is_empty() => {
            let procs = WorkerProcesses::launch(workers)?;
            Ok((Mode::Socket(procs.addrs.clone()), Some(procs)))
        }
        ModeArg::Socket => Ok((Mode::Socket(addrs.to_vec()), None)),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    command: &'a str,
    algorithm: &'a str,
    input: String,
    dataset: DatasetStats,
    partitions: Option<usize>,
    strategy: Option<String>,
    workers: Option<usize>,
    mode: Option<&'a str>,
    concepts: usize,
    iterations: Option<usize>,
    rounds: Option<usize>,
    batch_sizes: &'a [usize],
    /// Mining time; input parsing and output writing are excluded.
    wall_time_ms: f64,
    transfer: Option<&'a TransferStats>,
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<ExitCode> {
    let ctx = load(&a.input)?;
    let algo = Algorithm::from(a.algo);
    let rt = &a.runtime;
    let parts: Option<PartitionSet> = match (&rt.manifest, algo.is_distributed()) {
        (Some(path), true) => {
            let manifest: PartitionManifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            Some(PartitionSet::from_manifest(&ctx, &manifest)?)
        }
        (None, true) => {
            if rt.partitions == 0 {
                return Err(Error::InvalidArgument("--partitions must be at least 1".into()));
            }
            Some(split(&ctx, rt.partitions, rt.strategy.into())?)
        }
        (_, false) => None,
    };
    let workers = match &parts {
        Some(p) => rt.workers.unwrap_or(if rt.workers_addr.is_empty() { p.len() } else { rt.workers_addr.len() }),
        None => 0,
    };
    let (mode, procs) = if algo.is_distributed() {
        runtime_mode(rt.mode, &rt.workers_addr, workers)?
    } else {
        (Mode::InProcess, None)
    };
    let cfg = EngineConfig {
        partitions: rt.partitions,
        strategy: rt.strategy.into(),
        workers: Some(workers),
        mode,
        mr: MrOptions {
            max_iterations: rt.max_iterations,
            ..MrOptions::default()
        },
    };
    let outcome: Outcome = match &parts {
        Some(p) => engine::enumerate_partitioned(p, algo, &cfg)?,
        None => engine::enumerate(&ctx, algo, &cfg)?,
    };
    if let Some(p) = procs {
        p.wait();
    }

    fio::write_concepts(&ctx, &outcome.concepts, a.out_format.into(), sink(a.out.as_deref())?)?;

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "enumerate",
        algorithm: algo.name(),
        input: a.input.input.display().to_string(),
        dataset: fio::stats(&ctx),
        partitions: parts.as_ref().map(|p| p.len()),
        strategy: parts.as_ref().and_then(|p| p.strategy()).map(|s| s.to_string()),
        workers: parts.as_ref().map(|_| workers),
        mode: parts.as_ref().map(|_| match rt.mode {
            ModeArg::Local => "local",
            ModeArg::Socket => "socket",
        }),
        concepts: outcome.concepts.len(),
        iterations: outcome.iterations,
        rounds: outcome.rounds,
        batch_sizes: &outcome.batch_sizes,
        wall_time_ms: outcome.elapsed.as_secs_f64() * 1e3,
        transfer: outcome.transfer.as_ref(),
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &a.report {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => eprintln!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_split(a: SplitArgs) -> Result<ExitCode> {
    let ctx = load(&a.input)?;
    let parts = split(&ctx, a.partitions, a.strategy.into())?;
    let mut out = sink(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &parts.manifest())?;
    writeln!(out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let fixed = match &a.input {
        Some(path) => {
            let input = InputArgs {
                input: path.clone(),
                format: a.format,
                attributes: None,
                sort_attributes: SortArg::File,
            };
            Some(load(&input)?)
        }
        None => None,
    };
    let opts = VerifyOptions {
        trials: a.trials,
        seed: a.seed,
        max_objects: a.max_objects,
        max_attributes: a.max_attrs,
        mutant: a.inject_mutant,
    };
    let report = engine::verify(&opts, fixed.as_ref())?;
    match &report.failure {
        None => {
            println!("verify: {} trials, {} checks, all agree with the oracle", report.trials, report.checks);
            Ok(ExitCode::SUCCESS)
        }
        Some(f) => {
            println!(
                "verify: FAILED at trial {} ({}, {} partitions, {}): {}",
                f.trial, f.algorithm, f.partitions, f.strategy, f.detail
            );
            println!("counterexample context:\n{}", f.context);
            Ok(ExitCode::from(1))
        }
    }
}

#[derive(Serialize)]
struct BenchRow {
    algorithm: String,
    partitions: Option<usize>,
    workers: Option<usize>,
    repeat: usize,
    median_ms: f64,
    iterations: Option<usize>,
    concepts: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    if a.repeat == 0 {
        return Err(Error::InvalidArgument("--repeat must be at least 1".into()));
    }
    let ctx = load(&a.input)?;
    let mut rows = Vec::new();
    for &algo_arg in &a.algos {
        let algo = Algorithm::from(algo_arg);
        let grid: Vec<(Option<usize>, Option<usize>)> = if algo.is_distributed() {
            a.partitions
                .iter()
                .flat_map(|&n| a.workers.iter().filter(move |&&w| w <= n).map(move |&w| (Some(n), Some(w))))
                .collect()
        } else {
            vec![(None, None)]
        };
        for (n, w) in grid {
            let mut times = Vec::new();
            let mut last = None;
            for _ in 0..a.repeat {
                let (mode, procs) = match w {
                    Some(w) => runtime_mode(a.mode, &[], w)?,
                    None => (Mode::InProcess, None),
                };
                let cfg = EngineConfig {
                    partitions: n.unwrap_or(1),
                    strategy: a.strategy.into(),
                    workers: w,
                    mode,
                    mr: MrOptions {
                        max_iterations: a.max_iterations,
                        ..MrOptions::default()
                    },
                };
                let out = engine::enumerate(&ctx, algo, &cfg)?;
                if let Some(p) = procs {
                    p.wait();
                }
                times.push(out.elapsed.as_secs_f64() * 1e3);
                last = Some(out);
            }
            let out = last.expect("repeat >= 1");
            let row = BenchRow {
                algorithm: algo.name().to_string(),
                partitions: n,
                workers: w,
                repeat: a.repeat,
                median_ms: median(times),
                iterations: out.iterations,
                concepts: out.concepts.len(),
            };
            eprintln!(
                "bench: {} n={:?} w={:?} concepts={} iterations={:?} median_ms={:.1}",
                row.algorithm, n, w, row.concepts, row.iterations, row.median_ms
            );
            rows.push(row);
        }
    }
    let json = a.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let mut out = sink(a.out.as_deref())?;
    if json {
        serde_json::to_writer_pretty(
            &mut out,
            &serde_json::json!({ "schema_version": REPORT_SCHEMA_VERSION, "dataset": fio::stats(&ctx), "rows": rows }),
        )?;
        writeln!(out)?;
    } else {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_worker(a: WorkerArgs) -> Result<ExitCode> {
    let listener = TcpListener::bind(&a.listen)
        .map_err(|e| Error::Config(format!("cannot listen on {}: {e}", a.listen)))?;
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    worker::serve(listener)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(a: InputArgs) -> Result<ExitCode> {
    let ctx = load(&a)?;
    println!("{}", serde_json::to_string(&fio::stats(&ctx))?);
    Ok(ExitCode::SUCCESS)
}
