//! Learning loops (PGPE and GPOMDP), deterministic deployment, variance
//! sweeps and run-record persistence.
//!
//! Every random draw comes from a stream keyed by [`SeedPlan::seed_for`], and
//! per-sample results are reduced in index order, so a run is a pure function
//! of its config regardless of how many worker threads execute it.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{Algo, ExperimentConfig};
use crate::env::{rollout_seeded, Actor, Env};
use crate::error::{Error, Result};
use crate::estimator::{discounted_return, gpomdp_contribution, GradientEstimate};
use crate::numeric::all_finite;
use crate::policy::{AbPolicy, PbHyperpolicy, PolicyArch, PolicyParams};
use crate::seed::{child, stream, Purpose, SeedPlan};
use crate::svg::{Chart, Series};

/// Batch-mean returns below this value flag the run as diverged.
pub const DIVERGENCE_RETURN: f64 = -1e9;

pub const RECORD_HEADER: &str = "k,J_hat,J_det,grad_norm,zeta,wallclock_ms";
pub const SWEEP_HEADER: &str = "sigma_sq,seed,J_hat_final,J_det_final,status";

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "WNPG_WORKERS";

/// Worker count: `WNPG_WORKERS` if set, else `requested`, else the number of
/// available cores.
pub fn resolve_workers(requested: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::invalid(
                    "WNPG_WORKERS",
                    format!("expected a positive integer, got {v:?}"),
                )
            });
    }
    Ok(requested
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Fill the `wallclock_ms` column. Off by default so records are
    /// byte-reproducible.
    pub wallclock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            wallclock: false,
        }
    }
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }

    fn pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))
    }
}

/// One iteration of a run. Fields after a divergence are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub k: usize,
    /// Batch mean of the discounted returns (estimates `J_P` or `J_A`).
    pub j_hat: Option<f64>,
    /// Deployed deterministic return, on the evaluation cadence.
    pub j_det: Option<f64>,
    pub grad_norm: Option<f64>,
    pub zeta: Option<f64>,
    pub wallclock_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Ok,
    Diverged { iteration: usize, reason: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged { .. } => "diverged",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Ok)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    /// Exactly `K` rows, `k = 1..=K`.
    pub rows: Vec<RunRow>,
    pub arch: PolicyArch,
    /// Parameters after the last successful update.
    pub theta_final: Vec<f64>,
    pub status: RunStatus,
    /// Seed of the deployment evaluation at `k = K`.
    pub final_eval_seed: u64,
}

impl RunRecord {
    pub fn final_params(&self) -> Result<PolicyParams> {
        PolicyParams::new(self.arch, self.theta_final.clone())
    }

    pub fn final_j_det(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.j_det)
    }

    pub fn final_j_hat(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.j_hat)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(RECORD_HEADER);
        out.push('\n');
        let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k,
                cell(r.j_hat),
                cell(r.j_det),
                cell(r.grad_norm),
                cell(r.zeta),
                cell(r.wallclock_ms)
            ));
        }
        out
    }

    pub fn curves_chart(&self, title: &str) -> Chart {
        let j_hat = self
            .rows
            .iter()
            .filter_map(|r| r.j_hat.map(|v| (r.k as f64, v)))
            .collect();
        let j_det = self
            .rows
            .iter()
            .filter_map(|r| r.j_det.map(|v| (r.k as f64, v)))
            .collect();
        Chart {
            title: title.to_string(),
            x_label: "iteration k".into(),
            y_label: "discounted return".into(),
            log_x: false,
            series: vec![Series::new("J_hat", j_hat), Series::new("J_det", j_det)],
        }
    }
}

/// Mean and standard error of a return estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnEstimate {
    pub mean: f64,
    /// Zero by convention when `episodes = 1` (see `single_episode`).
    pub std_error: f64,
    pub episodes: usize,
    pub single_episode: bool,
}

impl ReturnEstimate {
    fn from_returns(returns: &[f64]) -> Self {
        let n = returns.len();
        // identical returns (deterministic envs) stay exact
        if returns.iter().all(|&r| r == returns[0]) {
            return Self {
                mean: returns[0],
                std_error: 0.0,
                episodes: n,
                single_episode: n == 1,
            };
        }
        let mean = returns.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            episodes: n,
            single_episode: n == 1,
        }
    }
}

/// Return of the noiseless policy `μ_θ`. Episode `e` runs on the stream
/// `child(seed, e)`, so the only randomness is the initial state.
pub fn deploy_deterministic(
    params: &PolicyParams,
    env: &Env,
    episodes: usize,
    seed: u64,
    clip: Option<(f64, f64)>,
) -> Result<ReturnEstimate> {
    if episodes == 0 {
        return Err(Error::invalid("episodes", "must be at least 1"));
    }
    let returns = (0..episodes)
        .map(|e| {
            let traj = rollout_seeded(
                env,
                Actor::Deterministic(params),
                child(seed, e as u64),
                clip,
            )?;
            Ok(discounted_return(&traj, env.gamma()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReturnEstimate::from_returns(&returns))
}

/// Monte Carlo `J_P` or `J_A` at `params`, with common random numbers
/// against [`deploy_deterministic`] under the same `seed`: episode `e` sees
/// the same initial state in both.
pub fn evaluate_stochastic(
    config: &ExperimentConfig,
    params: &PolicyParams,
    episodes: usize,
    seed: u64,
) -> Result<ReturnEstimate> {
    if episodes == 0 {
        return Err(Error::invalid("episodes", "must be at least 1"));
    }
    let env = config.env_spec()?;
    let noise = config.noise_spec()?;
    let clip = config.clip();
    let mut returns = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let episode_seed = child(seed, e as u64);
        let traj = match config.algo {
            Algo::Pgpe => {
                let hyper = PbHyperpolicy::new(params.clone(), noise)?;
                let (sampled, _) = hyper.sample_params(&mut stream(child(episode_seed, 1)));
                rollout_seeded(&env, Actor::Deterministic(&sampled), episode_seed, clip)?
            }
            Algo::Gpomdp => {
                let policy = AbPolicy::new(params.clone(), noise)?;
                rollout_seeded(&env, Actor::Stochastic(&policy), episode_seed, clip)?
            }
        };
        returns.push(discounted_return(&traj, env.gamma()));
    }
    Ok(ReturnEstimate::from_returns(&returns))
}

/// Per-sample results of one iteration.
struct Batch {
    returns: Vec<f64>,
    contributions: Vec<Vec<f64>>,
    /// Number of trajectories whose state norm saturated.
    saturated: usize,
}

fn collect_batch<F>(pool: &ThreadPool, n: usize, sample: F) -> Result<Batch>
where
    F: Fn(usize) -> Result<(f64, Vec<f64>, bool)> + Sync,
{
    let results: Vec<(f64, Vec<f64>, bool)> =
        pool.install(|| (0..n).into_par_iter().map(&sample).collect::<Result<_>>())?;
    let mut batch = Batch {
        returns: Vec::with_capacity(n),
        contributions: Vec::with_capacity(n),
        saturated: 0,
    };
    for (ret, contribution, saturated) in results {
        batch.returns.push(ret);
        batch.contributions.push(contribution);
        batch.saturated += usize::from(saturated);
    }
    Ok(batch)
}

/// PGPE batch: `θᵢ ~ ν_θ` from `seed_for(PbSample, k, i)`, one deterministic
/// rollout each from `seed_for(Rollout, k, i)`.
fn pgpe_batch(
    pool: &ThreadPool,
    config: &ExperimentConfig,
    env: &Env,
    plan: &SeedPlan,
    hyper: &PbHyperpolicy,
    k: usize,
) -> Result<Batch> {
    let clip = config.clip();
    collect_batch(pool, config.batch, |i| {
        let (sampled, _) =
            hyper.sample_params(&mut plan.stream_for(Purpose::PbSample, k as u64, i as u64));
        let traj = rollout_seeded(
            env,
            Actor::Deterministic(&sampled),
            plan.seed_for(Purpose::Rollout, k as u64, i as u64),
            clip,
        )?;
        let ret = discounted_return(&traj, env.gamma());
        let mut g = hyper.log_gradient(&sampled)?;
        g.iter_mut().for_each(|x| *x *= ret);
        Ok((ret, g, traj.saturated))
    })
}

/// GPOMDP batch: stochastic rollouts from `seed_for(Rollout, k, i)`.
fn gpomdp_batch(
    pool: &ThreadPool,
    config: &ExperimentConfig,
    env: &Env,
    plan: &SeedPlan,
    policy: &AbPolicy,
    k: usize,
) -> Result<Batch> {
    let clip = config.clip();
    collect_batch(pool, config.batch, |i| {
        let traj = rollout_seeded(
            env,
            Actor::Stochastic(policy),
            plan.seed_for(Purpose::Rollout, k as u64, i as u64),
            clip,
        )?;
        let ret = discounted_return(&traj, env.gamma());
        Ok((
            ret,
            gpomdp_contribution(&traj, policy, env.gamma())?,
            traj.saturated,
        ))
    })
}

fn initial_params(config: &ExperimentConfig, plan: &SeedPlan) -> Result<PolicyParams> {
    let arch = config.arch()?;
    match &config.theta0 {
        Some(t) => PolicyParams::new(arch, t.clone()),
        None => Ok(arch.initial_params(&mut plan.stream_for(Purpose::Init, 0, 0))),
    }
}

fn run_in(config: &ExperimentConfig, pool: &ThreadPool, wallclock: bool) -> Result<RunRecord> {
    config.validate_for_training()?;
    let env = config.env_spec()?;
    let noise = config.noise_spec()?;
    let plan = SeedPlan::new(config.master_seed);
    let mut params = initial_params(config, &plan)?;
    let mut opt = config.optimizer_state()?;
    let episodes = config.eval_episodes();
    let iterations = config.iterations;
    let final_eval_seed = plan.seed_for(Purpose::Eval, iterations as u64, 0);

    let mut rows = Vec::with_capacity(iterations);
    let mut status = RunStatus::Ok;
    for k in 1..=iterations {
        let started = wallclock.then(Instant::now);
        let batch = match config.algo {
            Algo::Pgpe => pgpe_batch(
                pool,
                config,
                &env,
                &plan,
                &PbHyperpolicy::new(params.clone(), noise)?,
                k,
            )?,
            Algo::Gpomdp => gpomdp_batch(
                pool,
                config,
                &env,
                &plan,
                &AbPolicy::new(params.clone(), noise)?,
                k,
            )?,
        };
        let j_hat = batch.returns.iter().sum::<f64>() / batch.returns.len() as f64;

        // saturated trajectories are expected while gains are unstable; only
        // the batch return decides divergence
        let divergence = if !j_hat.is_finite() {
            Some("non-finite return")
        } else if j_hat < DIVERGENCE_RETURN {
            Some("batch return below the divergence threshold")
        } else {
            None
        };
        if let Some(reason) = divergence {
            rows.push(RunRow {
                k,
                j_hat: Some(j_hat),
                j_det: None,
                grad_norm: None,
                zeta: None,
                wallclock_ms: None,
            });
            status = RunStatus::Diverged {
                iteration: k,
                reason: format!(
                    "{reason} ({} of {} trajectories saturated)",
                    batch.saturated, config.batch
                ),
            };
            break;
        }

        let estimate = GradientEstimate::from_contributions(params.dim(), &batch.contributions)?;
        let (next, next_opt) = opt.step(&params.theta, &estimate.grad, k)?;
        if !all_finite(&next) {
            rows.push(RunRow {
                k,
                j_hat: Some(j_hat),
                j_det: None,
                grad_norm: Some(estimate.norm()),
                zeta: Some(opt.zeta),
                wallclock_ms: None,
            });
            status = RunStatus::Diverged {
                iteration: k,
                reason: "non-finite parameters".into(),
            };
            break;
        }
        params = params.with_theta(next)?;
        opt = next_opt;

        let j_det = if k % config.eval_every == 0 || k == iterations {
            let seed = plan.seed_for(Purpose::Eval, k as u64, 0);
            Some(deploy_deterministic(&params, &env, episodes, seed, config.clip())?.mean)
        } else {
            None
        };
        rows.push(RunRow {
            k,
            j_hat: Some(j_hat),
            j_det,
            grad_norm: Some(estimate.norm()),
            zeta: Some(opt.zeta),
            wallclock_ms: started.map(|t| t.elapsed().as_secs_f64() * 1e3),
        });
    }
    // flagged tail: keep exactly K rows
    for k in rows.len() + 1..=iterations {
        rows.push(RunRow {
            k,
            j_hat: None,
            j_det: None,
            grad_norm: None,
            zeta: None,
            wallclock_ms: None,
        });
    }
    Ok(RunRecord {
        rows,
        arch: params.arch,
        theta_final: params.theta,
        status,
        final_eval_seed,
    })
}

/// Train with whichever algorithm the config names.
pub fn train(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    run_in(config, &opts.pool()?, opts.wallclock)
}

pub fn run_pgpe(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    if config.algo != Algo::Pgpe {
        return Err(Error::config("algo", "run_pgpe needs algo = pgpe"));
    }
    train(config, opts)
}

pub fn run_gpomdp(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    if config.algo != Algo::Gpomdp {
        return Err(Error::config("algo", "run_gpomdp needs algo = gpomdp"));
    }
    train(config, opts)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub sigma_sq: f64,
    pub seed: u64,
    /// Monte Carlo stochastic return at `θ_K`, paired with `j_det_final`.
    pub j_hat_final: Option<f64>,
    pub j_det_final: Option<f64>,
    /// `ok`, `diverged` or `error`.
    pub status: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAggregate {
    pub sigma_sq: f64,
    pub n_ok: usize,
    pub j_det_mean: f64,
    /// 95% normal-approximation half-width.
    pub j_det_halfwidth: f64,
    pub j_hat_mean: f64,
    pub j_hat_halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

fn mean_halfwidth(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sigma_sq,
                r.seed,
                cell(r.j_hat_final),
                cell(r.j_det_final),
                r.status
            ));
        }
        out
    }

    pub fn chart(&self, title: &str) -> Chart {
        let ok: Vec<&SweepAggregate> = self.aggregates.iter().filter(|a| a.n_ok > 0).collect();
        Chart {
            title: title.to_string(),
            x_label: "sigma^2".into(),
            y_label: "final return".into(),
            log_x: true,
            series: vec![
                Series::new(
                    "J_det",
                    ok.iter().map(|a| (a.sigma_sq, a.j_det_mean)).collect(),
                )
                .with_errors(ok.iter().map(|a| a.j_det_halfwidth).collect()),
                Series::new(
                    "J_hat",
                    ok.iter().map(|a| (a.sigma_sq, a.j_hat_mean)).collect(),
                )
                .with_errors(ok.iter().map(|a| a.j_hat_halfwidth).collect()),
            ],
        }
    }

    /// Aggregate with the highest mean deployed return.
    pub fn best(&self) -> Option<&SweepAggregate> {
        self.aggregates
            .iter()
            .filter(|a| a.n_ok > 0 && a.j_det_mean.is_finite())
            .max_by(|a, b| a.j_det_mean.total_cmp(&b.j_det_mean))
    }
}

/// Train once per `(σ², repeat)` pair. Repeat `r` uses `master_seed + r`;
/// failed runs are reported as flagged rows and excluded from aggregates.
pub fn variance_sweep(base: &ExperimentConfig, opts: &RunOptions) -> Result<SweepResult> {
    base.validate()?;
    let values = base
        .sigma_sq_values
        .clone()
        .unwrap_or_else(|| vec![base.noise.sigma * base.noise.sigma]);
    let jobs: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&s2| {
            (0..base.repeat_seeds as u64).map(move |r| (s2, base.master_seed.wrapping_add(r)))
        })
        .collect();
    let pool = opts.pool()?;
    let run_one = |&(sigma_sq, seed): &(f64, u64)| -> SweepRow {
        let cfg = ExperimentConfig {
            master_seed: seed,
            sigma_sq_values: None,
            repeat_seeds: 1,
            ..base.with_sigma(sigma_sq.sqrt())
        };
        let outcome = run_in(&cfg, &pool, false).and_then(|rec| {
            if !rec.status.is_ok() {
                return Ok((
                    rec.final_j_hat(),
                    None,
                    "diverged",
                    format!("{:?}", rec.status),
                ));
            }
            let params = rec.final_params()?;
            let j_hat =
                evaluate_stochastic(&cfg, &params, cfg.eval_episodes(), rec.final_eval_seed)?.mean;
            Ok((Some(j_hat), rec.final_j_det(), "ok", String::new()))
        });
        match outcome {
            Ok((j_hat_final, j_det_final, status, detail)) => SweepRow {
                sigma_sq,
                seed,
                j_hat_final,
                j_det_final,
                status,
                detail,
            },
            Err(e) => SweepRow {
                sigma_sq,
                seed,
                j_hat_final: None,
                j_det_final: None,
                status: "error",
                detail: e.to_string(),
            },
        }
    };
    let rows: Vec<SweepRow> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let aggregates = values
        .iter()
        .map(|&s2| {
            let ok: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.sigma_sq == s2 && r.status == "ok")
                .collect();
            let det: Vec<f64> = ok.iter().filter_map(|r| r.j_det_final).collect();
            let hat: Vec<f64> = ok.iter().filter_map(|r| r.j_hat_final).collect();
            let (j_det_mean, j_det_halfwidth) = mean_halfwidth(&det);
            let (j_hat_mean, j_hat_halfwidth) = mean_halfwidth(&hat);
            SweepAggregate {
                sigma_sq: s2,
                n_ok: ok.len(),
                j_det_mean,
                j_det_halfwidth,
                j_hat_mean,
                j_hat_halfwidth,
            }
        })
        .collect();
    Ok(SweepResult { rows, aggregates })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub fn theta_to_bytes(theta: &[f64]) -> Vec<u8> {
    theta.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn theta_from_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::invalid(
            "theta",
            format!(
                "{} bytes is not a whole number of float64 values",
                bytes.len()
            ),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read_theta(path: &Path) -> Result<Vec<f64>> {
    theta_from_bytes(&fs::read(path)?)
}

fn prepare_out_dir(dir: &Path, marker: &str, force: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    if !force && dir.join(marker).exists() {
        return Err(Error::invalid(
            "out",
            format!(
                "{} already holds {marker}; pass --force to overwrite",
                dir.display()
            ),
        ));
    }
    Ok(())
}

/// Write `record.csv`, `theta_final.f64`, `config.json` and `curves.svg`.
pub fn write_run(
    dir: &Path,
    record: &RunRecord,
    config: &ExperimentConfig,
    force: bool,
) -> Result<()> {
    prepare_out_dir(dir, "record.csv", force)?;
    fs::write(dir.join("record.csv"), record.to_csv())?;
    fs::write(
        dir.join("theta_final.f64"),
        theta_to_bytes(&record.theta_final),
    )?;
    fs::write(dir.join("config.json"), config.to_json_pretty() + "\n")?;
    let title = format!("{} on {}", config.algo.name(), config.env_spec()?.name());
    fs::write(dir.join("curves.svg"), record.curves_chart(&title).render())?;
    Ok(())
}

/// Write `sweep.csv`, `sweep.svg` and the base `config.json`.
pub fn write_sweep(
    dir: &Path,
    result: &SweepResult,
    config: &ExperimentConfig,
    force: bool,
) -> Result<()> {
    prepare_out_dir(dir, "sweep.csv", force)?;
    fs::write(dir.join("sweep.csv"), result.to_csv())?;
    let title = format!(
        "{} on {}: deployed return vs exploration",
        config.algo.name(),
        config.env_spec()?.name()
    );
    fs::write(dir.join("sweep.svg"), result.chart(&title).render())?;
    fs::write(dir.join("config.json"), config.to_json_pretty() + "\n")?;
    Ok(())
}
