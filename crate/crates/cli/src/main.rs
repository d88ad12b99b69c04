//! `rdskew`: simulation, estimation and Monte Carlo verification of realized
//! skewness and its pre-averaged variants.
//!
//! Exit codes: 0 on success, 1 when an enabled experiment check fails its
//! threshold, 2 on configuration or usage errors.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rdskew::estimators::{estimate_all, ObservedSeries};
use rdskew::harness::{run_experiment, ExperimentConfig};
use rdskew::io;
use rdskew::kernels::{kernel_constants, DEFAULT_PANELS};
use rdskew::limitlaw::{
    abs_cubic_limit_sample, counterexample_sequence, gamma_matrix, noisy_skew_variance,
    oracle_targets, skew_limit_sample, thm2_limit_sample, LimitLawParams,
};
use rdskew::simkit::{
    apply_noise, default_euler_step, generate_times, simulate_path, ObservationPipeline,
};

use config::{kernel_from_flag, load};

#[derive(Parser)]
#[command(name = "rdskew", version, about = "Realized skewness: simulation, estimation, limit laws")]
struct Cli {
    /// Print progress information to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path (and optionally an observed series) from a model config.
    Simulate(SimulateArgs),
    /// Generate an observation-time sequence from a scheme config.
    Times(TimesArgs),
    /// Contaminate a (time, price) series with microstructure noise.
    Noise(NoiseArgs),
    /// Estimate all statistics from a (time, price) CSV.
    Estimate(EstimateArgs),
    /// Print the psi and Phi constants of a weight function as JSON.
    Constants(ConstantsArgs),
    /// Draw limit-law samples and the covariance matrix for an exported path.
    Limits(LimitsArgs),
    /// Run a Monte Carlo experiment with enabled checks.
    Experiment(ExperimentArgs),
    /// Tabulate the oscillating counterexample sequence c_n.
    Counterexample(CounterexampleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Path export (time, x, xc, sigma).
    #[arg(long)]
    out_path: PathBuf,
    /// Jump-ledger export (time, size, sigma_minus, sigma_plus).
    #[arg(long)]
    out_jumps: PathBuf,
    /// Observed-series export (time, price); needs [sampling] in the config.
    #[arg(long)]
    out_series: Option<PathBuf>,
}

#[derive(Args)]
struct TimesArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (time, g).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    config: PathBuf,
    /// Input CSV (time, price).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV (time, price) with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    delta_n: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// `min` or a kernel config file.
    #[arg(long, default_value = "min")]
    kernel: String,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    panels: usize,
    /// Output JSON; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// `min` or a kernel config file.
    #[arg(long, default_value = "min")]
    kernel: String,
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    panels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitsArgs {
    /// Path export produced by `simulate`.
    #[arg(long)]
    path: PathBuf,
    /// Jump-ledger export produced by `simulate`.
    #[arg(long)]
    jumps: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Covariance matrix and delta-method variance as JSON.
    #[arg(long)]
    out_gamma: PathBuf,
    /// Limit-law draws as CSV.
    #[arg(long)]
    out_draws: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Full report as JSON.
    #[arg(long)]
    out_report: PathBuf,
    /// Long-form per-replication CSV.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Oscillation frequency; must have a nonzero sine moment.
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 20)]
    n_max: u32,
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    panels: usize,
    /// Output CSV (n, delta_n, c_n); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Worker count for replication parallelism, from RDSKEW_WORKERS.
fn configure_workers() {
    if let Ok(value) = std::env::var("RDSKEW_WORKERS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(args, cli.verbose)?,
        Command::Times(args) => times(args)?,
        Command::Noise(args) => noise(args)?,
        Command::Estimate(args) => estimate(args)?,
        Command::Constants(args) => constants(args)?,
        Command::Limits(args) => limits(args)?,
        Command::Experiment(args) => return experiment(args, cli.verbose),
        Command::Counterexample(args) => counterexample(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    io::atomic_write(path, contents.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}

fn write_or_print(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_output(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs, verbose: bool) -> Result<()> {
    let cfg = load::<config::SimulateConfig>(&args.config)?.validated()?;
    let seed = args.seed.unwrap_or(cfg.seed);

    match &cfg.sampling {
        Some(sampling) => {
            let euler = cfg
                .euler_step
                .unwrap_or_else(|| default_euler_step(sampling.delta_n, cfg.model.horizon));
            if verbose {
                eprintln!("simulating with euler step {euler} and delta_n {}", sampling.delta_n);
            }
            let pipeline = ObservationPipeline {
                model: &cfg.model,
                scheme: &sampling.scheme,
                noise: cfg.noise.as_ref(),
                delta_n: sampling.delta_n,
                euler_step: euler,
                seed,
            };
            let (path, times, values) = pipeline.run()?;
            write_output(&args.out_path, &io::path_csv(&path))?;
            write_output(&args.out_jumps, &io::jumps_csv(&path))?;
            if let Some(series_out) = &args.out_series {
                write_output(series_out, &io::series_csv(&times.times, &values))?;
            }
        }
        None => {
            if args.out_series.is_some() {
                bail!("--out-series needs a [sampling] section in the config");
            }
            let euler = cfg.euler_step.expect("validated");
            let path = simulate_path(&cfg.model, euler, seed)?;
            write_output(&args.out_path, &io::path_csv(&path))?;
            write_output(&args.out_jumps, &io::jumps_csv(&path))?;
        }
    }
    Ok(())
}

fn times(args: TimesArgs) -> Result<()> {
    let cfg = load::<config::TimesConfig>(&args.config)?.validated()?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let st = generate_times(&cfg.scheme, cfg.delta_n, cfg.horizon, seed, None)?;
    write_output(&args.out, &io::times_csv(&st))
}

fn noise(args: NoiseArgs) -> Result<()> {
    let cfg = load::<config::NoiseConfig>(&args.config)?.validated()?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let (raw_times, values) = io::read_series_csv(file)?;
    let st = io::sampling_times_from_raw(raw_times, cfg.delta_n, cfg.horizon)?;
    let noisy = apply_noise(&values, &st, &cfg.noise, seed, None)?;
    write_output(&args.out, &io::series_csv(&st.times, &noisy))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let kernel = kernel_from_flag(&args.kernel)?;
    let constants = kernel_constants(&kernel, args.panels)?;
    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let (raw_times, values) = io::read_series_csv(file)?;
    let st = io::sampling_times_from_raw(raw_times, args.delta_n, args.horizon)?;
    let series = ObservedSeries::new(st, values, true)?;
    let estimates = estimate_all(&series, args.delta_n, args.horizon, args.theta, &kernel, &constants)?;
    let json = serde_json::to_string_pretty(&estimates)?;
    write_or_print(&args.out, &format!("{json}\n"))
}

fn constants(args: ConstantsArgs) -> Result<()> {
    let kernel = kernel_from_flag(&args.kernel)?;
    let report = kernel.validate(args.panels);
    if !report.is_valid() {
        bail!("kernel fails validity: {report:?}");
    }
    let k = kernel_constants(&kernel, args.panels)?;
    let json = serde_json::to_string_pretty(&k)?;
    write_or_print(&args.out, &format!("{json}\n"))
}

fn limits(args: LimitsArgs) -> Result<()> {
    let cfg = load::<config::LimitsConfig>(&args.config)?.validated()?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let kernel = cfg.kernel.build()?;
    let constants = kernel_constants(&kernel, cfg.quad_panels.unwrap_or(DEFAULT_PANELS))?;

    let path_file = std::fs::File::open(&args.path)
        .with_context(|| format!("cannot read {}", args.path.display()))?;
    let jumps_file = std::fs::File::open(&args.jumps)
        .with_context(|| format!("cannot read {}", args.jumps.display()))?;
    let path = io::read_path_csv(path_file, jumps_file, args.horizon)?;

    let mut params = LimitLawParams::from_path(&path);
    if let Some(alpha) = &cfg.alpha {
        let g = cfg.g.unwrap_or(rdskew::simkit::GSpec::ONE);
        params = params.with_noise_context(&path, &g, alpha, cfg.theta)?;
    }
    let targets = oracle_targets(&path)?;
    let gamma = gamma_matrix(&params, cfg.theta, &constants)?;
    let ratio_variance = noisy_skew_variance(&gamma, params.qv, params.cubic_jump_sum)?;

    #[derive(serde::Serialize)]
    struct GammaOut<'a> {
        targets: &'a rdskew::limitlaw::OracleTargets,
        gamma: &'a rdskew::limitlaw::GammaMatrix,
        noisy_skew_variance: &'a rdskew::limitlaw::NoisySkewVariance,
    }
    let json = serde_json::to_string_pretty(&GammaOut {
        targets: &targets,
        gamma: &gamma,
        noisy_skew_variance: &ratio_variance,
    })?;
    write_output(&args.out_gamma, &format!("{json}\n"))?;

    let joint = thm2_limit_sample(&params, |x| 3.0 * x * x, cfg.n_draws, seed);
    let abs_cubic = abs_cubic_limit_sample(&params, cfg.n_draws, seed.wrapping_add(1));
    let skew = skew_limit_sample(&params, cfg.n_draws, seed.wrapping_add(2))?;
    let mut csv = String::from("draw,rv_limit,cubic_limit,abs_cubic_limit,skew_limit\n");
    for i in 0..cfg.n_draws {
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            joint[i].0, joint[i].1, abs_cubic[i], skew[i]
        ));
    }
    write_output(&args.out_draws, &csv)
}

fn experiment(args: ExperimentArgs, verbose: bool) -> Result<ExitCode> {
    let file = load::<config::ExperimentFile>(&args.config)?.validated()?;
    let config = ExperimentConfig {
        scenario: file.scenario,
        delta_grid: file.delta_grid,
        theta: file.theta,
        kernel: file.kernel.build()?,
        quad_panels: file.quad_panels.unwrap_or(DEFAULT_PANELS),
        n_reps: file.n_reps,
        seed: args.seed.unwrap_or(file.seed),
        euler_step: file.euler_step,
        checks: file.checks,
    };
    let report = run_experiment(&config)?;
    for check in &report.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        eprintln!("check {}: {} — {}", check.name, verdict, check.detail);
    }
    if verbose {
        for block in &report.blocks {
            eprintln!(
                "delta {}: {} ok, {} degenerate",
                block.delta_n,
                block.replications.len(),
                block.degenerate.len()
            );
        }
    }
    let json = serde_json::to_string_pretty(&report)?;
    write_output(&args.out_report, &format!("{json}\n"))?;
    if let Some(csv_path) = &args.out_csv {
        write_output(csv_path, &io::report_long_csv(&report))?;
    }
    Ok(if report.all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn counterexample(args: CounterexampleArgs) -> Result<()> {
    let seq = counterexample_sequence(args.a, args.n_max, args.panels)?;
    let mut csv = String::from("n,delta_n,c_n\n");
    for p in &seq.points {
        csv.push_str(&format!("{},{},{}\n", p.n, p.delta_n, p.c_n));
    }
    write_or_print(&args.out, &csv)
}
