//! `otinit` — benchmark warm-start initializers for the log-domain
//! Sinkhorn solver, or solve a single transport problem from measure files.
//!
//! Exit codes: 0 on success, 1 if any run failed to converge, 2 on
//! configuration errors (bad flags, config file, or input files).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use otinit_bench::config::{
    parse_accel_list, parse_config_file, parse_epsilon_list, parse_init_list, parse_size_list,
    AccelKind, ExperimentConfig, InitKind, PartialConfig,
};
use otinit_bench::datasets::DatasetKind;
use otinit_bench::runner::{
    acceleration_of, build_init, run_suite, summary_path, write_records_csv, write_summary_csv,
    SuiteOutcome, MAX_SWEEPS,
};
use otinit_core::{
    coupling_from_duals, dual_objective, marginal_error, sinkhorn_solve, CostMatrix,
    SinkhornConfig,
};

#[derive(Parser)]
#[command(
    name = "otinit",
    version,
    about = "Benchmark dual warm starts for entropy-regularized optimal transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite over sizes, epsilons, initializers, accelerations, seeds.
    Bench(BenchArgs),
    /// Solve one problem from measure files and print the outcome.
    Solve(SolveArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Config file with `key = value` lines (dataset, sizes, epsilon, tau,
    /// init, accel, seeds, out). Flags below override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset tag: blobs1d | two_moons | s_curve_2d | blobs2d_3 |
    /// gauss_pair(d) | mixture_pair(d,k)
    #[arg(long)]
    dataset: Option<String>,
    /// Problem sizes per side, comma separated (e.g. 256,1024)
    #[arg(long)]
    n: Option<String>,
    /// Regularization strengths, comma separated
    #[arg(long)]
    epsilon: Option<String>,
    /// Marginal-error stopping threshold
    #[arg(long)]
    tau: Option<f64>,
    /// Initializers, comma separated: zero | dualsort | gaus | gmm(k) |
    /// subsample(size)
    #[arg(long)]
    init: Option<String>,
    /// Accelerations, comma separated: none | momentum | adaptive |
    /// anderson | eps_decay
    #[arg(long)]
    accel: Option<String>,
    /// Number of seeds (runs use seeds 0..N)
    #[arg(long)]
    seeds: Option<u64>,
    /// Per-run CSV path; the summary goes next to it as *_summary.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Source measure file (`n d` header, then `weight coords...` rows)
    #[arg(long)]
    mu: PathBuf,
    /// Target measure file (same format)
    #[arg(long)]
    nu: PathBuf,
    /// Entropic regularization strength
    #[arg(long)]
    epsilon: f64,
    /// Initializer tag (zero | dualsort | gaus | gmm(k) | subsample(size))
    #[arg(long, default_value = "zero")]
    init: String,
    /// Acceleration tag (none | momentum | adaptive | anderson | eps_decay)
    #[arg(long, default_value = "none")]
    accel: String,
    /// Marginal-error stopping threshold
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
    /// Seed for initializers that draw randomness (gmm, subsample)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench(args) => {
            let config = match bench_config(args) {
                Ok(config) => config,
                Err(err) => {
                    eprintln!("configuration error: {err:#}");
                    return ExitCode::from(2);
                }
            };
            match run_bench(&config) {
                Ok(outcome) if outcome.all_converged => ExitCode::SUCCESS,
                Ok(_) => {
                    eprintln!("some runs failed to converge");
                    ExitCode::from(1)
                }
                Err(err) => {
                    eprintln!("benchmark failed: {err:#}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Solve(args) => {
            let problem = match solve_setup(&args) {
                Ok(problem) => problem,
                Err(err) => {
                    eprintln!("configuration error: {err:#}");
                    return ExitCode::from(2);
                }
            };
            match run_solve(&args, problem) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => {
                    eprintln!("solver did not converge");
                    ExitCode::from(1)
                }
                Err(err) => {
                    eprintln!("solve failed: {err:#}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn bench_config(args: BenchArgs) -> Result<ExperimentConfig> {
    let from_file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => PartialConfig::default(),
    };
    let from_flags = PartialConfig {
        dataset: args
            .dataset
            .as_deref()
            .map(|s| s.parse::<DatasetKind>().map_err(|e| anyhow!(e)))
            .transpose()?,
        sizes: args.n.as_deref().map(parse_size_list).transpose()?,
        epsilons: args.epsilon.as_deref().map(parse_epsilon_list).transpose()?,
        tau: args.tau,
        inits: args.init.as_deref().map(parse_init_list).transpose()?,
        accels: args.accel.as_deref().map(parse_accel_list).transpose()?,
        seeds: args.seeds,
        out: args.out,
    };
    from_flags.over(from_file).finalize()
}

fn run_bench(config: &ExperimentConfig) -> Result<SuiteOutcome> {
    let outcome = run_suite(config)?;
    print_summary(&outcome);
    if let Some(out) = &config.out {
        write_records_csv(out, &outcome.records)?;
        let summary = summary_path(out);
        write_summary_csv(&summary, &outcome.summaries)?;
        eprintln!(
            "wrote {} runs to {} and {} groups to {}",
            outcome.records.len(),
            out.display(),
            outcome.summaries.len(),
            summary.display()
        );
    }
    Ok(outcome)
}

fn print_summary(outcome: &SuiteOutcome) {
    println!(
        "{:<18} {:>6} {:>9} {:<16} {:<10} {:>8} {:>8} {:>8}",
        "dataset", "n", "epsilon", "init", "accel", "median", "q25", "q75"
    );
    for s in &outcome.summaries {
        println!(
            "{:<18} {:>6} {:>9} {:<16} {:<10} {:>8.1} {:>8.1} {:>8.1}",
            s.dataset, s.n, s.epsilon, s.init, s.accel, s.median_iters, s.q25, s.q75
        );
    }
}

struct SolveProblem {
    mu: otinit_core::DiscreteMeasure,
    nu: otinit_core::DiscreteMeasure,
    cost: CostMatrix,
    init: InitKind,
    accel: AccelKind,
}

fn solve_setup(args: &SolveArgs) -> Result<SolveProblem> {
    let mu = otinit_core::io::read_measure(&args.mu)
        .with_context(|| format!("reading {}", args.mu.display()))?;
    let nu = otinit_core::io::read_measure(&args.nu)
        .with_context(|| format!("reading {}", args.nu.display()))?;
    if !(args.epsilon > 0.0) || !args.epsilon.is_finite() {
        return Err(anyhow!("epsilon must be positive, got {}", args.epsilon));
    }
    if !(args.tau > 0.0) || !args.tau.is_finite() {
        return Err(anyhow!("tau must be positive, got {}", args.tau));
    }
    let init = args.init.parse::<InitKind>().map_err(|e| anyhow!(e))?;
    let accel = args.accel.parse::<AccelKind>().map_err(|e| anyhow!(e))?;
    let cost = CostMatrix::between(&mu, &nu).context("building the cost matrix")?;
    Ok(SolveProblem { mu, nu, cost, init, accel })
}

fn run_solve(args: &SolveArgs, problem: SolveProblem) -> Result<bool> {
    let SolveProblem { mu, nu, cost, init, accel } = problem;

    let started = Instant::now();
    let warm = build_init(init, &mu, &nu, args.epsilon, args.tau, args.seed)?;
    let init_time = started.elapsed().as_secs_f64();

    let config = SinkhornConfig {
        epsilon: args.epsilon,
        tau: args.tau,
        max_iters: MAX_SWEEPS,
        check_every: 1,
        acceleration: acceleration_of(accel),
        ..SinkhornConfig::new(args.epsilon)
    };
    let (duals, report) = sinkhorn_solve(&mu, &nu, &cost, &config, &warm)?;
    let objective = dual_objective(&duals, &mu, &nu, &cost)?;
    let plan = coupling_from_duals(&duals, &cost)?;
    let error = marginal_error(&plan, &mu, &nu)?;

    println!("problem: {} x {} points in d = {}", mu.len(), nu.len(), mu.dim());
    println!("init: {init} ({init_time:.6} s)");
    println!("iterations (full sweeps): {}", report.iterations);
    println!("converged: {}", report.converged);
    println!("dual objective: {objective:.12}");
    println!("marginal error: {error:.6e}");
    println!("solve time: {:.6} s", report.wall_time_s);
    Ok(report.converged)
}
