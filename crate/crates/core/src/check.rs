//! Fast self-checks run by `wnpg check`: noise moments, score functions
//! against finite differences, estimator unbiasedness on the bandit, the
//! deployment-gap bound on a grid, theory goldens and seed determinism.

use std::time::{Duration, Instant};

use crate::config::{Algo, ExperimentConfig};
use crate::env::{rollout_seeded, Actor, BanditSpec, Env};
use crate::error::Result;
use crate::estimator::{discounted_return, gpomdp_contribution};
use crate::noise::{empirical_moment_check, NoiseSpec};
use crate::numeric::{gaussian_smoothing, VectorWelford};
use crate::policy::{AbPolicy, PbHyperpolicy, PolicyArch, PolicyParams};
use crate::seed::{child, stream};
use crate::theory::{lipschitz_constants, smoothness_l2, RegularityConstants};
use crate::train::{train, RunOptions};

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Run only checks whose name contains this string.
    pub filter: Option<String>,
    /// Mutation canary: negate the GPOMDP estimate so the unbiasedness
    /// check must fail.
    pub corrupt_gpomdp_sign: bool,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type CheckFn = fn(&CheckOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("noise/gaussian_moments", noise_gaussian),
    ("noise/uniform_moments", noise_uniform),
    ("noise/score_second_moment", noise_score),
    ("score/action_policy", score_action),
    ("score/hyperpolicy", score_hyper),
    ("unbiasedness/pgpe_bandit", unbiased_pgpe),
    ("unbiasedness/gpomdp_bandit", unbiased_gpomdp),
    ("deployment_gap/bandit_grid", deployment_grid),
    ("theory/goldens", theory_goldens),
    ("determinism/workers", determinism),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_checks(opts: &CheckOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|(name, _)| opts.filter.as_deref().is_none_or(|f| name.contains(f)))
        .map(|&(name, check)| {
            let started = Instant::now();
            let (passed, detail) = match check(opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                elapsed: started.elapsed(),
            }
        })
        .collect()
}

fn noise_gaussian(_: &CheckOptions) -> Result<(bool, String)> {
    let noise = NoiseSpec::gaussian(3, 0.5)?;
    let r = empirical_moment_check(&noise, 200_000, &mut stream(11))?;
    Ok((
        r.within_white_noise_bounds(0.5, 3),
        format!(
            "E|eps|^2 = {:.5} (bound {:.5}), |mean| = {:.2e}",
            r.mean_sq_norm, r.bound, r.mean_norm
        ),
    ))
}

fn noise_uniform(_: &CheckOptions) -> Result<(bool, String)> {
    let noise = NoiseSpec::uniform(3, 0.5)?;
    let r = empirical_moment_check(&noise, 200_000, &mut stream(12))?;
    Ok((
        r.within_white_noise_bounds(0.5, 3),
        format!(
            "E|eps|^2 = {:.5} (bound {:.5}), |mean| = {:.2e}",
            r.mean_sq_norm, r.bound, r.mean_norm
        ),
    ))
}

fn noise_score(_: &CheckOptions) -> Result<(bool, String)> {
    let noise = NoiseSpec::gaussian(4, 0.3)?;
    let mut rng = stream(13);
    let n = 200_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let g = noise.score_gradient(&noise.sample(&mut rng))?;
        acc += g.iter().map(|x| x * x).sum::<f64>();
    }
    let got = acc / n as f64;
    let want = noise.score_second_moment()?;
    Ok((
        (got / want - 1.0).abs() < 0.02,
        format!("E|score|^2 = {got:.3}, d/sigma^2 = {want:.3}"),
    ))
}

fn gaussian_log_density(x: &[f64], mean: &[f64], sigma: f64) -> f64 {
    let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b).powi(2)).sum();
    -0.5 * sq / (sigma * sigma) - x.len() as f64 * sigma.ln()
}

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn score_action(_: &CheckOptions) -> Result<(bool, String)> {
    let sigma = 0.7;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (k, arch) in [PolicyArch::linear(2, 2)?, PolicyArch::mlp(2, 2)?]
        .into_iter()
        .enumerate()
    {
        let mut rng = stream(20 + k as u64);
        let params = arch.initial_params(&mut rng);
        let params = params.with_theta(params.theta.iter().map(|t| 0.3 * t + 0.1).collect())?;
        let policy = AbPolicy::new(params.clone(), NoiseSpec::gaussian(2, sigma)?)?;
        let s = [0.4, -1.1];
        let (a, _) = policy.sample_action(&s, &mut rng)?;
        let analytic = policy.log_policy_gradient(&s, &a)?;
        let mut theta = params.theta.clone();
        let mut fd = Vec::with_capacity(theta.len());
        for j in 0..theta.len() {
            let orig = theta[j];
            theta[j] = orig + h;
            let up = gaussian_log_density(&a, &params.with_theta(theta.clone())?.act(&s)?, sigma);
            theta[j] = orig - h;
            let down = gaussian_log_density(&a, &params.with_theta(theta.clone())?.act(&s)?, sigma);
            theta[j] = orig;
            fd.push((up - down) / (2.0 * h));
        }
        worst = worst.max(max_rel_err(&analytic, &fd));
    }
    Ok((
        worst < 1e-5,
        format!("max relative error {worst:.2e} (linear and mlp)"),
    ))
}

fn score_hyper(_: &CheckOptions) -> Result<(bool, String)> {
    let sigma = 0.4;
    let h = 1e-6;
    let arch = PolicyArch::linear(2, 2)?;
    let mean = PolicyParams::new(arch, vec![0.2, -0.3, 0.5, 0.1])?;
    let hyper = PbHyperpolicy::new(mean.clone(), NoiseSpec::gaussian(4, sigma)?)?;
    let (sampled, _) = hyper.sample_params(&mut stream(31));
    let analytic = hyper.log_gradient(&sampled)?;
    let mut m = mean.theta.clone();
    let mut fd = Vec::new();
    for j in 0..m.len() {
        let orig = m[j];
        m[j] = orig + h;
        let up = gaussian_log_density(&sampled.theta, &m, sigma);
        m[j] = orig - h;
        let down = gaussian_log_density(&sampled.theta, &m, sigma);
        m[j] = orig;
        fd.push((up - down) / (2.0 * h));
    }
    let err = max_rel_err(&analytic, &fd);
    Ok((err < 1e-5, format!("max relative error {err:.2e}")))
}

/// `|mean - oracle| ≤ 3 SE` coordinate-wise.
fn within_three_se(mean: &[f64], oracle: &[f64], se: &[f64]) -> (bool, String) {
    let ok = mean
        .iter()
        .zip(oracle)
        .zip(se)
        .all(|((m, o), s)| (m - o).abs() <= 3.0 * s);
    (
        ok,
        format!("estimate {mean:.4?} oracle {oracle:.4?} se {se:.4?}"),
    )
}

const UNBIASED_SAMPLES: usize = 40_000;

fn unbiased_pgpe(_: &CheckOptions) -> Result<(bool, String)> {
    let (theta, sigma) = (-0.2, 0.3);
    let bandit = BanditSpec::new(1, 1.0, 1, 1.0)?;
    let env = Env::Bandit(bandit.clone());
    let mean = PolicyParams::new(PolicyArch::linear(1, 1)?, vec![theta])?;
    let hyper = PbHyperpolicy::new(mean, NoiseSpec::gaussian(1, sigma)?)?;
    let mut acc = VectorWelford::new(1);
    for i in 0..UNBIASED_SAMPLES as u64 {
        let (sampled, _) = hyper.sample_params(&mut stream(child(41, i)));
        let ret = discounted_return(
            &rollout_seeded(&env, Actor::Deterministic(&sampled), child(42, i), None)?,
            1.0,
        );
        let g: Vec<f64> = hyper
            .log_gradient(&sampled)?
            .iter()
            .map(|x| x * ret)
            .collect();
        acc.push(&g);
    }
    let jp = |t: f64| gaussian_smoothing(|x| bandit.f(x), t, sigma, 20_000);
    let h = 1e-4;
    let oracle = [(jp(theta + h) - jp(theta - h)) / (2.0 * h)];
    let se: Vec<f64> = acc
        .variances()
        .iter()
        .map(|v| (v / UNBIASED_SAMPLES as f64).sqrt())
        .collect();
    Ok(within_three_se(acc.mean(), &oracle, &se))
}

fn unbiased_gpomdp(opts: &CheckOptions) -> Result<(bool, String)> {
    let (theta, sigma) = (-0.2, 0.3);
    let bandit = BanditSpec::new(1, 1.0, 2, 0.9)?;
    let env = Env::Bandit(bandit.clone());
    let params = PolicyParams::new(PolicyArch::linear(1, 1)?, vec![theta])?;
    let policy = AbPolicy::new(params, NoiseSpec::gaussian(1, sigma)?)?;
    let sign = if opts.corrupt_gpomdp_sign { -1.0 } else { 1.0 };
    let mut acc = VectorWelford::new(1);
    for i in 0..UNBIASED_SAMPLES as u64 {
        let traj = rollout_seeded(&env, Actor::Stochastic(&policy), child(51, i), None)?;
        let g: Vec<f64> = gpomdp_contribution(&traj, &policy, 0.9)?
            .iter()
            .map(|x| sign * x)
            .collect();
        acc.push(&g);
    }
    // each step's reward is f(θ + ε_t) with fresh ε_t, so J_A = (1 + γ) E f(θ + σZ)
    let ja =
        |t: f64| bandit.horizon_factor() * gaussian_smoothing(|x| bandit.f(x), t, sigma, 20_000);
    let h = 1e-4;
    let oracle = [(ja(theta + h) - ja(theta - h)) / (2.0 * h)];
    let se: Vec<f64> = acc
        .variances()
        .iter()
        .map(|v| (v / UNBIASED_SAMPLES as f64).sqrt())
        .collect();
    Ok(within_three_se(acc.mean(), &oracle, &se))
}

/// `|J_D - J_P| ≤ L_J √d σ` on a 201-point grid over `[-2, 2]` for the
/// uniform-noise bandit, both sides in closed form.
pub fn deployment_gap_violations(sigma: f64) -> Result<(usize, f64)> {
    let bandit = BanditSpec::new(1, 1.0, 1, 1.0)?;
    let bound = bandit.jd_lipschitz() * (bandit.dim as f64).sqrt() * sigma;
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..=200 {
        let t = -2.0 + 4.0 * i as f64 / 200.0;
        let gap = (bandit.jd_analytic(&[t])? - bandit.jp_analytic(&[t], sigma)?).abs();
        if gap > bound {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(gap / bound);
    }
    Ok((violations, worst_ratio))
}

fn deployment_grid(_: &CheckOptions) -> Result<(bool, String)> {
    let mut total = 0;
    let mut detail = Vec::new();
    for sigma in [0.05, 0.1, 0.2] {
        let (v, worst) = deployment_gap_violations(sigma)?;
        total += v;
        detail.push(format!(
            "sigma {sigma}: {v} violations, max gap/bound {worst:.3}"
        ));
    }
    Ok((total == 0, detail.join("; ")))
}

fn theory_goldens(_: &CheckOptions) -> Result<(bool, String)> {
    let rc = RegularityConstants::unit();
    let l = lipschitz_constants(&rc)?.l;
    let l2 = smoothness_l2(&rc)?;
    let ok = (l - 4.0).abs() < 1e-12 && (l2 - 14.0).abs() < 1e-12;
    Ok((
        ok,
        format!("L = {l}, L2 = {l2} for unit constants at gamma = 1/2"),
    ))
}

fn determinism(_: &CheckOptions) -> Result<(bool, String)> {
    let mut outputs = Vec::new();
    for algo in [Algo::Pgpe, Algo::Gpomdp] {
        let cfg = ExperimentConfig {
            algo,
            iterations: 30,
            ..ExperimentConfig::bandit_smoke()
        };
        for workers in [1, 4] {
            let rec = train(&cfg, &RunOptions::with_workers(workers))?;
            outputs.push((
                algo,
                workers,
                rec.to_csv(),
                crate::train::theta_to_bytes(&rec.theta_final),
            ));
        }
    }
    let ok = outputs
        .chunks(2)
        .all(|p| p[0].2 == p[1].2 && p[0].3 == p[1].3);
    Ok((
        ok,
        "record.csv and theta bytes with 1 vs 4 workers, both algorithms".into(),
    ))
}
