use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use lockstep_hmc::Precision;
use lockstep_hmc_cli::commands::{
    bench_chains, default_chain_list, grad_check, precision_demo, sample, sample_summary,
    write_sample_artifacts, BenchConfig, PrecisionDemoConfig, GRAD_CHECK_TOLERANCE,
};
use lockstep_hmc_cli::output::{write_bench, write_json};
use lockstep_hmc_cli::{CliError, ModelSpec, Retention, RunConfig};

#[derive(Parser)]
#[command(name = "lockstep-hmc", version, about = "Lockstep multi-chain HMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Warm up, sample, and write diagnostics (and optionally the trace).
    Sample(SampleArgs),
    /// Sweep the number of chains and record draws per second as CSV.
    BenchChains(BenchArgs),
    /// Compare analytic gradients against central differences.
    GradCheck(GradCheckArgs),
    /// Show single-precision roundoff in naive vs stable accept ratios.
    PrecisionDemo(PrecisionArgs),
}

#[derive(Args, Clone)]
struct TargetArgs {
    /// german-credit:PATH, synthetic:N,D,SPARSITY or gaussian:P
    #[arg(long, default_value = "synthetic:1000,24,0.25")]
    model: ModelSpec,
    /// Seed for synthetic data, independent of the sampler seed.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "double")]
    precision: Precision,
    /// Initial states are uniform on [-r, r] in every coordinate.
    #[arg(long, default_value_t = 0.1)]
    init_radius: f64,
}

#[derive(Args, Clone)]
struct KernelArgs {
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    #[arg(long, default_value_t = 32)]
    leapfrog_steps: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    jitter: bool,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    stable_ratio: bool,
    /// Worker threads (defaults to one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 1000)]
    warmup: usize,
    /// Tune step size and diagonal mass during warmup.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    adapt: bool,
    #[arg(long, value_enum, default_value = "full")]
    retention: Retention,
    /// Directory for report.json and trace.csv.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Comma-separated, nondecreasing chain counts.
    #[arg(long, value_delimiter = ',')]
    chains: Option<Vec<usize>>,
    /// Timed transitions per chain count.
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GradCheckArgs {
    #[command(flatten)]
    target: TargetArgs,
}

#[derive(Args)]
struct PrecisionArgs {
    #[arg(long, default_value = "synthetic:20000,4,0.5")]
    model: ModelSpec,
    /// Dataset replication factor; chosen automatically when absent.
    #[arg(long)]
    replication: Option<usize>,
    #[arg(long, default_value_t = 16)]
    chains: usize,
    #[arg(long, default_value_t = 200)]
    warmup: usize,
    #[arg(long, default_value_t = 200)]
    draws: usize,
    #[arg(long, default_value_t = 8)]
    leapfrog_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report as JSON here.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run_config(target: TargetArgs, kernel: KernelArgs) -> RunConfig {
    RunConfig {
        model: target.model,
        chains: 1,
        draws: 1,
        warmup: 0,
        step_size: kernel.step_size,
        leapfrog_steps: kernel.leapfrog_steps,
        jitter: kernel.jitter,
        precision: target.precision,
        stable_ratio: kernel.stable_ratio,
        adapt: false,
        seed: target.seed,
        data_seed: target.data_seed,
        output: None,
        retention: Retention::Full,
        threads: kernel.threads,
        init_radius: target.init_radius,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample(args) => {
            let cfg = RunConfig {
                chains: args.chains,
                draws: args.draws,
                warmup: args.warmup,
                adapt: args.adapt,
                retention: args.retention,
                output: args.output,
                ..run_config(args.target, args.kernel)
            };
            let outcome = sample(&cfg)?;
            if let Some(dir) = &cfg.output {
                write_sample_artifacts(&outcome, dir)?;
            }
            print!("{}", sample_summary(&outcome.report));
        }
        Command::BenchChains(args) => {
            let cfg = BenchConfig {
                run: RunConfig {
                    draws: args.draws,
                    ..run_config(args.target, args.kernel)
                },
                chain_list: args.chains.unwrap_or_else(default_chain_list),
                repeats: args.repeats,
            };
            let rows = bench_chains(&cfg)?;
            match &args.output {
                Some(path) => {
                    let f = std::fs::File::create(path)
                        .map_err(|e| CliError::Other(anyhow::anyhow!("creating {}: {e}", path.display())))?;
                    write_bench(&rows, f)?;
                }
                None => write_bench(&rows, std::io::stdout().lock())?,
            }
        }
        Command::GradCheck(args) => {
            let kernel = KernelArgs {
                step_size: 0.1,
                leapfrog_steps: 1,
                jitter: false,
                stable_ratio: true,
                threads: None,
            };
            let cfg = run_config(args.target, kernel);
            let report = grad_check(&cfg)?;
            println!(
                "{}: max relative error {:.3e} over {} states (tolerance {:.0e})",
                report.model, report.max_error, report.states, GRAD_CHECK_TOLERANCE
            );
            if !report.passed {
                return Err(CliError::CheckFailed(format!(
                    "gradient check failed: {:.3e} >= {:.0e}",
                    report.max_error, GRAD_CHECK_TOLERANCE
                )));
            }
        }
        Command::PrecisionDemo(args) => {
            let cfg = PrecisionDemoConfig {
                model: args.model,
                replication: args.replication,
                chains: args.chains,
                warmup: args.warmup,
                draws: args.draws,
                leapfrog_steps: args.leapfrog_steps,
                seed: args.seed,
                data_seed: args.data_seed,
                threads: args.threads,
            };
            let report = precision_demo(&cfg)?;
            println!(
                "{} replicated {}x: |log p| = {:.4e} (2^24 = {:.4e})",
                report.model, report.replication, report.log_density_magnitude, report.threshold
            );
            println!("step size after warmup {:.4e}", report.step_size);
            println!("path     accept  flagged  max|err|    mean|err|");
            for (name, p) in [("naive", &report.naive), ("stable", &report.stable)] {
                println!(
                    "{name:<8} {:>6.3}  {:>7.4}  {:>9.3e}  {:>9.3e}",
                    p.acceptance_rate, p.roundoff_flag_fraction, p.max_abs_error, p.mean_abs_error
                );
            }
            if let Some(path) = &args.output {
                write_json(&report, path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
