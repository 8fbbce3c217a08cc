//! The `wnpg` command line: `train`, `sweep`, `deploy`, `theory`, `check`.
//!
//! Exit status is 0 on success, 2 when a training run was flagged as
//! diverged, and 1 on any error (with a one-line diagnostic on stderr).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::check::{run_checks, CheckOptions};
use crate::config::{Algo, ExperimentConfig};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::seed::{Purpose, SeedPlan};
use crate::theory::{
    deployment_gap_bound, lipschitz_constants, objective_smoothness, rate_table, rate_table_csv,
    sample_complexity, sigma_adaptive, variance_bounds, ConstantsReport, Exploration, RateInputs,
    RegularityConstants, RenderMode, SmoothnessBranch, WgdParams,
};
use crate::train::{
    deploy_deterministic, evaluate_stochastic, read_theta, resolve_workers, train, variance_sweep,
    write_run, write_sweep, RunOptions, RunStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wnpg",
    version,
    about = "Policy gradients with white-noise exploration and deterministic deployment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one run and write record.csv, theta_final.f64, config.json, curves.svg.
    Train(TrainArgs),
    /// Train once per (sigma^2, seed) and write sweep.csv and sweep.svg.
    Sweep(SweepArgs),
    /// Evaluate stored parameters with the noise switched off.
    Deploy(DeployArgs),
    /// Evaluate the closed-form constants and bounds.
    Theory(TheoryArgs),
    /// Run the fast self-check suite.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Dot-path override, e.g. `--set sigma=0.5` or `--set noise.kind=gaussian`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Worker threads for rollouts (WNPG_WORKERS takes precedence).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Override master_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record per-iteration wall-clock time (makes record.csv non-reproducible).
    #[arg(long)]
    pub wallclock: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct DeployArgs {
    /// Raw little-endian float64 parameter file.
    #[arg(long)]
    pub theta: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    /// Evaluation seed; defaults to the seed of the run's final evaluation.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// JSON file with the regularity constants.
    #[arg(long)]
    pub constants: PathBuf,
    /// Emit the sample-complexity rate table, with measured exponents, as CSV.
    #[arg(long)]
    pub table2: bool,
    /// Render constants in the simplified table form instead of the lemma form.
    #[arg(long)]
    pub table1: bool,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma_a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma_p: f64,
    /// Weak gradient domination constant alpha.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Weak gradient domination floor beta.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Initial suboptimality J* - J(theta_0).
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run only checks whose name contains this string.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, hide = true)]
    pub corrupt_gpomdp_sign: bool,
}

/// Parse arguments and run; returns the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wnpg: error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Deploy(a) => cmd_deploy(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Check(a) => Ok(cmd_check(a)),
    }
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&args.config, &args.overrides)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let mut config = load(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    config.validate_for_training()?;
    let opts = RunOptions {
        workers: resolve_workers(args.run.workers)?,
        wallclock: args.wallclock,
    };
    if args.out.join("record.csv").exists() && !args.run.force {
        return Err(Error::invalid(
            "out",
            format!(
                "{} already holds record.csv; pass --force to overwrite",
                args.out.display()
            ),
        ));
    }
    let record = train(&config, &opts)?;
    write_run(&args.out, &record, &config, args.run.force)?;
    match &record.status {
        RunStatus::Ok => {
            println!(
                "{} on {}: K = {}, final J_hat = {}, final J_det = {}",
                config.algo.name(),
                config.env_spec()?.name(),
                config.iterations,
                fmt_opt(record.final_j_hat()),
                fmt_opt(record.final_j_det())
            );
            Ok(EXIT_OK)
        }
        RunStatus::Diverged { iteration, reason } => {
            eprintln!("wnpg: run diverged at iteration {iteration}: {reason}");
            Ok(EXIT_DIVERGED)
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let config = load(&args.config)?;
    config.validate_for_training()?;
    if args.out.join("sweep.csv").exists() && !args.run.force {
        return Err(Error::invalid(
            "out",
            format!(
                "{} already holds sweep.csv; pass --force to overwrite",
                args.out.display()
            ),
        ));
    }
    let opts = RunOptions::with_workers(resolve_workers(args.run.workers)?);
    let result = variance_sweep(&config, &opts)?;
    write_sweep(&args.out, &result, &config, args.run.force)?;
    println!("sigma_sq        n_ok  J_det (mean ± 95%)          J_hat (mean ± 95%)");
    for a in &result.aggregates {
        println!(
            "{:<14e}  {:>4}  {:>12.6} ± {:<10.6}  {:>12.6} ± {:<10.6}",
            a.sigma_sq, a.n_ok, a.j_det_mean, a.j_det_halfwidth, a.j_hat_mean, a.j_hat_halfwidth
        );
    }
    for r in result.rows.iter().filter(|r| r.status != "ok") {
        eprintln!(
            "wnpg: flagged run sigma_sq={} seed={}: {} {}",
            r.sigma_sq, r.seed, r.status, r.detail
        );
    }
    if let Some(best) = result.best() {
        println!("best sigma_sq: {:e}", best.sigma_sq);
    }
    Ok(EXIT_OK)
}

fn cmd_deploy(args: DeployArgs) -> Result<i32> {
    let config = load(&args.config)?;
    let theta = read_theta(&args.theta)?;
    let params = PolicyParams::new(config.arch()?, theta)?;
    let seed = args.seed.unwrap_or_else(|| {
        SeedPlan::new(config.master_seed).seed_for(Purpose::Eval, config.iterations as u64, 0)
    });
    let env = config.env_spec()?;
    let det = deploy_deterministic(&params, &env, args.episodes, seed, config.clip())?;
    println!(
        "J_D = {:.6} ± {:.6} (std error, {} episodes{})",
        det.mean,
        det.std_error,
        det.episodes,
        if det.single_episode {
            ", single episode"
        } else {
            ""
        }
    );
    if config.noise.sigma > 0.0 && config.validate_for_training().is_ok() {
        let stoch = evaluate_stochastic(&config, &params, args.episodes, seed)?;
        let name = match config.algo {
            Algo::Pgpe => "J_P",
            Algo::Gpomdp => "J_A",
        };
        println!(
            "{name} = {:.6} ± {:.6} (sigma = {})",
            stoch.mean, stoch.std_error, config.noise.sigma
        );
    }
    Ok(EXIT_OK)
}

fn cmd_theory(args: TheoryArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.constants).map_err(|e| {
        Error::config(
            args.constants.display().to_string(),
            format!("cannot read constants: {e}"),
        )
    })?;
    let rc: RegularityConstants =
        serde_json::from_str(&text).map_err(|e| Error::config("<root>", e.to_string()))?;
    rc.validate()?;
    let wgd = WgdParams::new(args.alpha, args.beta)?;
    let inputs = RateInputs {
        epsilon: args.epsilon,
        sigma_p: args.sigma_p,
        sigma_a: args.sigma_a,
        wgd,
        j_gap: args.gap,
    };
    if args.table2 {
        print!("{}", rate_table_csv(&rate_table(&rc, &inputs)?));
    } else {
        print!("{}", theory_report(&rc, &inputs, args.table1)?);
    }
    Ok(EXIT_OK)
}

/// Human-readable summary of every bound at the given noise levels.
pub fn theory_report(
    rc: &RegularityConstants,
    inputs: &RateInputs,
    table1: bool,
) -> Result<String> {
    let mut out = String::new();
    let mode = if table1 {
        RenderMode::Table1
    } else {
        RenderMode::Lemma
    };
    let report = ConstantsReport::new(rc, inputs.sigma_a, inputs.sigma_p, mode)?;
    let _ = writeln!(out, "{report}");
    let lc = lipschitz_constants(rc)?;
    let _ = writeln!(
        out,
        "deployment gap (uniform / suboptimality / tightness floor)"
    );
    for (name, l, d, sigma) in [
        ("action", lc.l, rc.d_action, inputs.sigma_a),
        ("parameter", lc.l_j, rc.d_theta, inputs.sigma_p),
    ] {
        let g = deployment_gap_bound(l, d, sigma);
        let _ = writeln!(
            out,
            "  {name:<9}  {:.6e} / {:.6e} / {:.6e}",
            g.uniform, g.suboptimality, g.tightness_floor
        );
    }
    let _ = writeln!(
        out,
        "epsilon-adaptive sigma at epsilon = {}",
        inputs.epsilon
    );
    let _ = writeln!(
        out,
        "  action     {:.6e}",
        sigma_adaptive(inputs.epsilon, lc.l, rc.d_action)?
    );
    let _ = writeln!(
        out,
        "  parameter  {:.6e}",
        sigma_adaptive(inputs.epsilon, lc.l_j, rc.d_theta)?
    );
    let _ = writeln!(
        out,
        "sample complexity NK at epsilon = {}, alpha = {}, beta = {}, gap = {}",
        inputs.epsilon, inputs.wgd.alpha, inputs.wgd.beta, inputs.j_gap
    );
    for (which, sigma) in [
        (Exploration::Action, inputs.sigma_a),
        (Exploration::Parameter, inputs.sigma_p),
    ] {
        let s = objective_smoothness(rc, which, sigma)?;
        let v = variance_bounds(rc, which, sigma)?;
        let nk = sample_complexity(&inputs.wgd, s.value, v, inputs.epsilon, inputs.j_gap)?;
        let branch = match s.branch {
            SmoothnessBranch::Deterministic => "L2 of J_D",
            SmoothnessBranch::Noise => "noise bound",
        };
        let _ = writeln!(
            out,
            "  {:<7} {:.6e}  (smoothness {:.6e} from {branch})",
            which.algo_name(),
            nk,
            s.value
        );
    }
    Ok(out)
}

fn cmd_check(args: CheckArgs) -> i32 {
    let outcomes = run_checks(&CheckOptions {
        filter: args.filter,
        corrupt_gpomdp_sign: args.corrupt_gpomdp_sign,
    });
    if outcomes.is_empty() {
        eprintln!("wnpg: no check matches the filter");
        return EXIT_ERROR;
    }
    let mut all = true;
    for o in &outcomes {
        all &= o.passed;
        println!(
            "{} {:<28} {:>7.2}s  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.elapsed.as_secs_f64(),
            o.detail
        );
    }
    if all {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}
