//! Command-line front end: single runs, batches and design verification.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, BatchStatistics, BenchError, GateMode, ProblemDefinition, RunRecord};
use crate::firefly::{FaParams, RunOutcome};
use crate::gating::{TestConfig, DEFAULT_CRITICAL};

/// Exit status for bad arguments or bad input content.
pub const EXIT_USAGE: u8 = 1;
/// Exit status for filesystem failures.
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "sfa-truss", version, about = "Truss topology optimization with a gated firefly swarm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One optimization run; writes its convergence trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Independent runs on seeds `seed..seed+runs`, with summary statistics.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluates a design given as `element,area` rows.
    Verify {
        #[arg(long)]
        problem: String,
        /// Areas file; defaults to the best-known design of a built-in problem.
        #[arg(long)]
        areas: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Fa,
    Sfa,
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in problem name or path to a problem file.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum, default_value_t = Algo::Sfa)]
    algo: Algo,
    #[arg(long, default_value_t = 20)]
    npop: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 2.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.978)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_CRITICAL, allow_negative_numbers = true)]
    critical: f64,
    /// Random step for fireflies that have no better partner.
    #[arg(long)]
    walk: bool,
    /// Output directory.
    #[arg(long, env = "SFA_TRUSS_OUT", default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn params(&self) -> Result<FaParams, Failure> {
        let p = FaParams {
            beta0: self.beta0,
            gamma: self.gamma,
            omega: self.omega,
            npop: self.npop,
            max_iterations: self.iters,
            random_walk: self.walk,
        };
        p.validate().map_err(Failure::Usage)?;
        Ok(p)
    }

    fn mode(&self) -> GateMode {
        match self.algo {
            Algo::Fa => GateMode::Fa,
            Algo::Sfa => GateMode::Sfa,
        }
    }

    fn test(&self) -> TestConfig {
        TestConfig { critical_value: self.critical }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Loads a built-in problem by name, falling back to a file path.
pub fn resolve_problem(name_or_path: &str) -> Result<ProblemDefinition, BenchError> {
    match bench::builtin_problem(name_or_path) {
        Err(BenchError::UnknownProblem(_)) => ProblemDefinition::load(Path::new(name_or_path)),
        other => other,
    }
}

/// Round-trip formatting for values written to CSV traces.
fn full(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `iteration,best_weight,cumulative_evaluations` rows.
pub fn write_trace(path: &Path, outcome: &RunOutcome) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "best_weight", "cumulative_evaluations"])?;
    for (k, (f, e)) in outcome.trace.iter().zip(&outcome.trace_evaluations).enumerate() {
        w.write_record([(k + 1).to_string(), full(*f), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace back as `(iteration, best_weight, cumulative_evaluations)`.
pub fn read_trace(path: &Path) -> Result<Vec<(usize, f64, u64)>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect()
}

fn fmt3(v: f64) -> String {
    if v >= crate::objective::INFEASIBLE {
        "infeasible".into()
    } else {
        format!("{v:.3}")
    }
}

/// Batch statistics that do not depend on the machine.
#[derive(Debug, Serialize)]
struct Summary<'a> {
    problem: &'a str,
    algo: GateMode,
    base_seed: u64,
    runs: usize,
    min_weight: f64,
    avg_weight: f64,
    max_weight: f64,
    std_weight: f64,
    pct_within_2pct: f64,
    avg_evaluations: f64,
    avg_improving_moves: f64,
}

#[derive(Debug, Serialize)]
struct Timing {
    avg_wall_time: f64,
    wall_times: Vec<f64>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("plain records serialize");
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_{seed}.csv"))
}

fn report_run(r: &RunRecord) {
    let o = &r.outcome;
    println!(
        "seed={} best_weight={} evaluations={} improving_moves={} wall_time={:.3}s",
        r.seed,
        fmt3(o.best.f),
        o.evaluations,
        o.improving_moves,
        r.wall_time
    );
}

fn cmd_run(common: &Common, seed: u64) -> Result<(), Failure> {
    let params = common.params()?;
    let problem = resolve_problem(&common.problem)?;
    ensure_dir(&common.out)?;
    let record = bench::run_single(&problem, &params, common.mode(), common.test(), seed);
    let path = trace_path(&common.out, seed);
    write_trace(&path, &record.outcome).map_err(|e| io_failure(&path, e))?;
    report_run(&record);
    Ok(())
}

fn cmd_batch(common: &Common, seed: u64, runs: usize, threads: Option<usize>) -> Result<(), Failure> {
    if runs == 0 {
        return Err(Failure::Usage("runs must be at least 1".into()));
    }
    let params = common.params()?;
    let problem = resolve_problem(&common.problem)?;
    ensure_dir(&common.out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Usage("threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(e.to_string()))?;
    let (stats, records) =
        pool.install(|| bench::run_batch(&problem, &params, common.mode(), common.test(), runs, seed));
    for r in &records {
        let path = trace_path(&common.out, r.seed);
        write_trace(&path, &r.outcome).map_err(|e| io_failure(&path, e))?;
    }
    let BatchStatistics {
        runs,
        min_weight,
        avg_weight,
        max_weight,
        std_weight,
        pct_within_2pct,
        avg_evaluations,
        avg_improving_moves,
        avg_wall_time,
    } = stats;
    let summary = Summary {
        problem: &problem.name,
        algo: common.mode(),
        base_seed: seed,
        runs,
        min_weight,
        avg_weight,
        max_weight,
        std_weight,
        pct_within_2pct,
        avg_evaluations,
        avg_improving_moves,
    };
    write_json(&common.out.join("summary.json"), &summary)?;
    let timing = Timing { avg_wall_time, wall_times: records.iter().map(|r| r.wall_time).collect() };
    write_json(&common.out.join("timing.json"), &timing)?;
    println!(
        "runs={runs} min={} avg={} max={} std={:.3} within_2pct={:.1}% avg_evaluations={:.1} avg_improving_moves={:.1} avg_wall_time={:.3}s",
        fmt3(min_weight),
        fmt3(avg_weight),
        fmt3(max_weight),
        std_weight,
        pct_within_2pct,
        avg_evaluations,
        avg_improving_moves,
        avg_wall_time
    );
    Ok(())
}

fn cmd_verify(problem: &str, areas: Option<&Path>) -> Result<(), Failure> {
    let def = resolve_problem(problem)?;
    let areas: BTreeMap<usize, f64> = match areas {
        Some(p) => bench::load_areas(p)?,
        None => bench::builtin_best_areas(problem)
            .ok_or_else(|| Failure::Usage(format!("no shipped design for `{problem}`; pass --areas")))?,
    };
    let r = bench::verify_design(&def, &areas)?;
    if r.feasible {
        println!(
            "weight={:.3} feasible=true max_stress={:.3} max_disp={:.3}",
            r.weight, r.max_abs_stress, r.max_abs_displacement
        );
    } else if r.stable {
        println!(
            "infeasible f={:e} weight={:.3} max_stress={:.3} max_disp={:.3}",
            r.objective, r.weight, r.max_abs_stress, r.max_abs_displacement
        );
    } else {
        println!("infeasible f={:e} weight={:.3} unstable", r.objective, r.weight);
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the chosen command.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { common, seed } => cmd_run(common, *seed),
        Command::Batch { common, seed, runs, threads } => cmd_batch(common, *seed, *runs, *threads),
        Command::Verify { problem, areas } => cmd_verify(problem, areas.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
