//! The `kps` command line.
//!
//! Exit codes: 0 success (solve: feasible final assignment), 2 usage or
//! input errors, 3 solver divergence, 4 infeasible final assignment.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use kps_core::gen::generate;
use kps_core::metrics::evaluate_with_bound;
use kps_core::model::validate_instance;
use kps_core::solver::SolveError;

use crate::config::{parse_cost_law, parse_cost_mode, parse_local_pattern, GenOverlay};
use crate::engine::ParallelExecutor;
use crate::format::{load_instance, save_instance};
use crate::outputs;
use crate::run::{solve_instance, Algorithm, PresolvePolicy, RunOptions, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "kps",
    version,
    about = "Shard-parallel solver for generalized knapsack problems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file
    Generate(GenerateArgs),
    /// Solve an instance with dual descent or synchronous coordinate descent
    Solve(SolveArgs),
    /// Evaluate a solution file against an instance
    Evaluate(EvaluateArgs),
    /// Run DD (one run per learning rate) and SCD on the same instance
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of groups N
    #[arg(long)]
    n: Option<usize>,
    /// Items per group M
    #[arg(long)]
    m: Option<usize>,
    /// Global constraints K
    #[arg(long)]
    k: Option<usize>,
    /// Local pattern: a capacity (e.g. `1`, `2`) or `2,2,3`
    #[arg(long)]
    local: Option<String>,
    /// Cost storage: `dense` or `diag`
    #[arg(long)]
    cost_mode: Option<String>,
    /// Cost distribution: `uniform01` or `mixed`
    #[arg(long)]
    cost_law: Option<String>,
    /// Budget tightness factor (default 0.5)
    #[arg(long)]
    tightness: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// key=value settings file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `dd` or `scd`
    #[arg(long)]
    algorithm: String,
    /// Learning rate; required for dd
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iters: Option<u32>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Enable bucketed reduce with the given minimal bucket size
    #[arg(long)]
    bucket_delta: Option<f64>,
    /// Warm-start sample size (default: 10000 when N > 100000, scd only)
    #[arg(long)]
    presolve: Option<usize>,
    #[arg(long)]
    no_presolve: bool,
    #[arg(long)]
    no_postprocess: bool,
    /// Worker threads (default: KP_THREADS or available cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Trace CSV providing the multipliers and dual bound
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated DD learning rates
    #[arg(long, default_value = "1e-3,2e-3")]
    alphas: String,
    /// Comma-separated algorithms to run: `dd`, `scd`
    #[arg(long, default_value = "dd,scd")]
    algorithms: String,
    #[arg(long)]
    max_iters: Option<u32>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long, default_value = ".")]
    output_dir: PathBuf,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn fail(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("KP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    })
    .max(1)
}

fn ensure_dir(dir: &Path) -> Result<(), i32> {
    std::fs::create_dir_all(dir).map_err(|e| fail(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_generate(args: GenerateArgs) -> i32 {
    let mut base = GenOverlay::default();
    if let Some(config) = &args.config {
        base = match GenOverlay::from_file(config) {
            Ok(overlay) => overlay,
            Err(e) => return fail(e),
        };
    }
    let mut flags = GenOverlay {
        num_groups: args.n,
        num_items: args.m,
        num_resources: args.k,
        tightness: args.tightness,
        seed: args.seed,
        ..GenOverlay::default()
    };
    macro_rules! parse_flag {
        ($src:expr, $parser:expr, $dst:expr) => {
            if let Some(text) = &$src {
                match $parser(text) {
                    Ok(v) => $dst = Some(v),
                    Err(e) => return fail(e),
                }
            }
        };
    }
    parse_flag!(args.local, parse_local_pattern, flags.pattern);
    parse_flag!(args.cost_mode, parse_cost_mode, flags.cost_mode);
    parse_flag!(args.cost_law, parse_cost_law, flags.cost_law);

    let spec = match flags.over(base).build() {
        Ok(spec) => spec,
        Err(e) => return fail(e),
    };
    let inst = match generate(&spec) {
        Ok(inst) => inst,
        Err(e) => return fail(e),
    };
    if ensure_dir(&args.output_dir).is_err() {
        return EXIT_USAGE;
    }
    let path = args.output_dir.join("instance.kpi");
    if let Err(e) = save_instance(&inst, &path) {
        return fail(e);
    }
    let budgets: Vec<String> = inst.budgets().iter().map(|b| format!("{b:.4}")).collect();
    println!(
        "{}: N={} M={} K={} L={} B=[{}]",
        path.display(),
        inst.num_groups(),
        inst.num_items(),
        inst.num_resources(),
        inst.locals().len(),
        budgets.join(", ")
    );
    EXIT_OK
}

fn load_validated(path: &Path) -> Result<kps_core::Instance, i32> {
    let inst = load_instance(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        for issue in report.issues.iter().take(10) {
            eprintln!("error: invalid instance: {issue}");
        }
        if report.issues.len() > 10 {
            eprintln!("error: ... and {} more issues", report.issues.len() - 10);
        }
        return Err(EXIT_USAGE);
    }
    Ok(inst)
}

fn cmd_solve(args: SolveArgs) -> i32 {
    let algorithm = match args.algorithm.as_str() {
        "dd" => match args.alpha {
            Some(alpha) if alpha > 0.0 => Algorithm::Dd { alpha },
            Some(alpha) => return fail(format!("--alpha must be positive, got {alpha}")),
            None => return fail("--algorithm dd requires --alpha"),
        },
        "scd" => Algorithm::Scd,
        other => return fail(format!("unknown algorithm `{other}` (expected dd or scd)")),
    };
    if let Some(delta) = args.bucket_delta {
        if !(delta > 0.0) {
            return fail(format!("--bucket-delta must be positive, got {delta}"));
        }
    }
    let inst = match load_validated(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };

    let mut opts = RunOptions::new(algorithm);
    opts.max_iters = args.max_iters;
    opts.tol = args.tol;
    opts.bucket_delta = args.bucket_delta;
    opts.presolve_seed = args.seed;
    opts.postprocess = !args.no_postprocess;
    opts.presolve = if args.no_presolve {
        PresolvePolicy::Off
    } else {
        match args.presolve {
            Some(n) => PresolvePolicy::Sample(n),
            None => PresolvePolicy::Auto,
        }
    };

    let exec = ParallelExecutor::new(resolve_threads(args.threads));
    let outcome = match solve_instance(&inst, &opts, &exec) {
        Ok(outcome) => outcome,
        Err(SolveError::Divergence { iteration }) => {
            eprintln!("error: diverged at iteration {iteration} (try a smaller --alpha)");
            return EXIT_DIVERGED;
        }
        Err(e) => return fail(e),
    };

    if ensure_dir(&args.output_dir).is_err() {
        return EXIT_USAGE;
    }
    if let Err(e) = write_outcome(&args.output_dir, &inst, &outcome, algorithm.name()) {
        return fail(e);
    }
    println!(
        "{} iterations={} converged={} primal={:.6} bound={:.6} ratio={:.6} max_violation={:.6} feasible={}",
        algorithm.name(),
        outcome.report.update_count(),
        outcome.report.converged,
        outcome.metrics.primal_value,
        outcome.metrics.dual_bound,
        outcome.metrics.optimality_ratio,
        outcome.metrics.max_violation_ratio,
        outcome.feasible
    );
    if outcome.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    }
}

fn write_outcome(
    dir: &Path,
    inst: &kps_core::Instance,
    outcome: &RunOutcome,
    algorithm: &str,
) -> std::io::Result<()> {
    outputs::write_solution(&outcome.assignment, &dir.join("solution.txt"))?;
    outputs::write_trace_csv(&outcome.report, &dir.join("trace.csv"))?;
    outputs::write_report_txt(
        &dir.join("report.txt"),
        inst,
        &outcome.report,
        &outcome.metrics,
        algorithm,
    )
}

fn cmd_evaluate(args: EvaluateArgs) -> i32 {
    let inst = match load_validated(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let assignment = match outputs::read_solution(&args.solution, &inst) {
        Ok(a) => a,
        Err(e) => return fail(format!("{}: {e}", args.solution.display())),
    };
    let exec = ParallelExecutor::new(resolve_threads(args.threads));
    let bound = match &args.trace {
        Some(trace) => match outputs::read_trace_summary(trace) {
            Ok(summary) => summary.min_dual,
            Err(e) => return fail(format!("{}: {e}", trace.display())),
        },
        None => kps_core::solver::dual_value(&inst, &vec![0.0; inst.num_resources()], &exec),
    };
    let metrics = evaluate_with_bound(&inst, &assignment, bound);
    if ensure_dir(&args.output_dir).is_err() {
        return EXIT_USAGE;
    }
    if let Err(e) = outputs::write_metrics_csv(&metrics, &args.output_dir.join("metrics.csv")) {
        return fail(e);
    }
    print!("{}", outputs::render_metrics_table(&metrics));
    EXIT_OK
}

fn cmd_sweep(args: SweepArgs) -> i32 {
    let inst = match load_validated(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let algorithms: Vec<&str> = args.algorithms.split(',').map(str::trim).collect();
    for a in &algorithms {
        if *a != "dd" && *a != "scd" {
            return fail(format!("unknown algorithm `{a}` in --algorithms"));
        }
    }
    let mut alphas = Vec::new();
    if algorithms.contains(&"dd") {
        for token in args.alphas.split(',') {
            match token.trim().parse::<f64>() {
                Ok(alpha) if alpha > 0.0 => alphas.push(alpha),
                _ => return fail(format!("bad learning rate `{token}` in --alphas")),
            }
        }
    }

    let exec = ParallelExecutor::new(resolve_threads(args.threads));
    if ensure_dir(&args.output_dir).is_err() {
        return EXIT_USAGE;
    }

    let mut runs: Vec<(String, RunOutcome)> = Vec::new();
    let mut launch = |label: String, algorithm: Algorithm| -> Result<(), i32> {
        let mut opts = RunOptions::new(algorithm);
        opts.max_iters = args.max_iters;
        let outcome = match solve_instance(&inst, &opts, &exec) {
            Ok(outcome) => outcome,
            Err(SolveError::Divergence { iteration }) => {
                eprintln!("error: {label} diverged at iteration {iteration}");
                return Err(EXIT_DIVERGED);
            }
            Err(e) => return Err(fail(e)),
        };
        let trace = args.output_dir.join(format!("trace_{label}.csv"));
        if let Err(e) = outputs::write_trace_csv(&outcome.report, &trace) {
            return Err(fail(e));
        }
        println!(
            "{label}: iterations={} final_gap={:.6} final_violation={:.6}",
            outcome.report.update_count(),
            outcome.report.final_record().dual_value - outcome.report.final_record().primal_value,
            outcome.report.final_record().max_violation_ratio,
        );
        runs.push((label, outcome));
        Ok(())
    };

    if algorithms.contains(&"dd") {
        for &alpha in &alphas {
            if let Err(code) = launch(format!("dd_{alpha:e}"), Algorithm::Dd { alpha }) {
                return code;
            }
        }
    }
    if algorithms.contains(&"scd") {
        if let Err(code) = launch("scd".to_string(), Algorithm::Scd) {
            return code;
        }
    }

    // aligned comparison CSV: one row per iteration, one gap/violation
    // column pair per run, empty cells once a run has stopped
    let sweep_path = args.output_dir.join("sweep.csv");
    let rows = runs
        .iter()
        .map(|(_, o)| o.report.iterations.len())
        .max()
        .unwrap_or(0);
    let mut text = String::from("iter");
    for (label, _) in &runs {
        text.push_str(&format!(",{label}_gap,{label}_violation"));
    }
    text.push('\n');
    for row in 0..rows {
        text.push_str(&row.to_string());
        for (_, outcome) in &runs {
            match outcome.report.iterations.get(row) {
                Some(rec) => text.push_str(&format!(
                    ",{},{}",
                    rec.dual_value - rec.primal_value,
                    rec.max_violation_ratio
                )),
                None => text.push_str(",,"),
            }
        }
        text.push('\n');
    }
    if let Err(e) = std::fs::write(&sweep_path, text) {
        return fail(e);
    }
    EXIT_OK
}
