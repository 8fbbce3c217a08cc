//! GPOMDP and PGPE gradient estimators, discounted returns, a
//! common-random-numbers finite-difference oracle and variance probes.

use std::io::Write;

use crate::env::Trajectory;
use crate::error::{check_dim, Error, Result};
use crate::numeric::{axpy, VectorWelford};
use crate::policy::{AbPolicy, PbHyperpolicy, PolicyParams};

/// A batch gradient estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// Mean of the per-sample contributions.
    pub grad: Vec<f64>,
    pub batch_size: usize,
    /// Trace of the sample covariance of the per-sample contributions,
    /// divided by the batch size (an estimate of `tr Var[grad]`).
    pub per_sample_trace_variance: f64,
}

impl GradientEstimate {
    fn from_welford(w: VectorWelford) -> Self {
        let n = w.count();
        let tv = w.trace_variance() / n as f64;
        Self {
            grad: w.into_mean(),
            batch_size: n,
            per_sample_trace_variance: tv,
        }
    }

    /// Reduce precomputed per-sample contributions in the given order.
    pub fn from_contributions<'a, I>(dim: usize, contributions: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Vec<f64>>,
    {
        let mut acc = VectorWelford::new(dim);
        for c in contributions {
            check_dim("gradient contribution", dim, c.len())?;
            acc.push(c);
        }
        if acc.count() == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(Self::from_welford(acc))
    }

    pub fn norm(&self) -> f64 {
        crate::numeric::norm(&self.grad)
    }
}

/// `R(τ) = Σ_t γᵗ r_t`.
pub fn discounted_return(traj: &Trajectory, gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in &traj.rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Single-trajectory GPOMDP contribution `Σ_t (Σ_{k≤t} ∇log π(a_k|s_k)) γᵗ r_t`.
pub fn gpomdp_contribution(traj: &Trajectory, policy: &AbPolicy, gamma: f64) -> Result<Vec<f64>> {
    let d = policy.params.dim();
    let mut score_sum = vec![0.0; d];
    let mut out = vec![0.0; d];
    let mut discount = 1.0;
    for ((s, a), r) in traj.states.iter().zip(&traj.actions).zip(&traj.rewards) {
        let g = policy.log_policy_gradient(s, a)?;
        axpy(1.0, &g, &mut score_sum);
        axpy(discount * r, &score_sum, &mut out);
        discount *= gamma;
    }
    Ok(out)
}

/// GPOMDP: the batch mean of [`gpomdp_contribution`], reduced in index order.
pub fn gpomdp_estimate(
    trajs: &[Trajectory],
    policy: &AbPolicy,
    gamma: f64,
) -> Result<GradientEstimate> {
    if trajs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut acc = VectorWelford::new(policy.params.dim());
    for traj in trajs {
        if traj.sampled_theta.is_some() {
            return Err(Error::invalid(
                "trajs",
                "parameter-noise trajectory passed to GPOMDP",
            ));
        }
        acc.push(&gpomdp_contribution(traj, policy, gamma)?);
    }
    Ok(GradientEstimate::from_welford(acc))
}

/// PGPE: `(1/N) Σᵢ ∇log ν(θᵢ) R(τᵢ)`, one trajectory per sampled θᵢ.
pub fn pgpe_estimate(
    samples: &[(PolicyParams, f64)],
    hyper: &PbHyperpolicy,
) -> Result<GradientEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut acc = VectorWelford::new(hyper.mean.dim());
    for (theta, ret) in samples {
        let mut g = hyper.log_gradient(theta)?;
        g.iter_mut().for_each(|x| *x *= ret);
        acc.push(&g);
    }
    Ok(GradientEstimate::from_welford(acc))
}

/// Central differences with common random numbers: both `θ ± h eⱼ`
/// evaluations receive the same `seed`.
pub fn finite_difference_gradient<F>(
    objective: F,
    theta: &[f64],
    h: f64,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64], u64) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid("h", "step must be > 0"));
    }
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        x[j] = theta[j] + h;
        let fp = objective(&x, seed);
        x[j] = theta[j] - h;
        let fm = objective(&x, seed);
        x[j] = theta[j];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceRow {
    pub batch_size: usize,
    /// Trace of the empirical covariance of the batch estimate across repetitions.
    pub trace_variance: f64,
    pub reps: usize,
}

/// Empirical `tr Var[∇̂J]` of a batch estimator for each batch size.
///
/// `estimate(n, rep)` must return a full batch estimate of size `n` built
/// from randomness keyed by `(n, rep)`.
pub fn variance_scaling_probe<F>(
    estimate: F,
    batch_sizes: &[usize],
    reps: usize,
) -> Result<Vec<VarianceRow>>
where
    F: Fn(usize, usize) -> Result<Vec<f64>>,
{
    if reps < 100 {
        return Err(Error::invalid(
            "reps",
            format!("need at least 100 repetitions, got {reps}"),
        ));
    }
    let mut rows = Vec::with_capacity(batch_sizes.len());
    for &n in batch_sizes {
        let mut acc: Option<VectorWelford> = None;
        for rep in 0..reps {
            let g = estimate(n, rep)?;
            let w = acc.get_or_insert_with(|| VectorWelford::new(g.len()));
            check_dim("probe estimate", w.mean().len(), g.len())?;
            w.push(&g);
        }
        rows.push(VarianceRow {
            batch_size: n,
            trace_variance: acc.map(|w| w.trace_variance()).unwrap_or(0.0),
            reps,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(trace_variance)` against `log(N)`.
pub fn log_log_slope(rows: &[VarianceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.batch_size as f64).ln(), r.trace_variance.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// CSV with columns `N,trace_variance,reps,sigma,algo,env`.
pub fn write_variance_csv<W: Write>(
    mut out: W,
    rows: &[VarianceRow],
    sigma: f64,
    algo: &str,
    env: &str,
) -> std::io::Result<()> {
    writeln!(out, "N,trace_variance,reps,sigma,algo,env")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.batch_size, r.trace_variance, r.reps, sigma, algo, env
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{rollout, Actor, BanditSpec, Env};
    use crate::noise::NoiseSpec;
    use crate::policy::PolicyArch;
    use crate::seed::stream;

    fn traj(rewards: Vec<f64>) -> Trajectory {
        Trajectory {
            states: vec![vec![1.0]; rewards.len()],
            actions: vec![vec![0.0]; rewards.len()],
            rewards,
            ..Trajectory::default()
        }
    }

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&traj(vec![1.0, 1.0, 1.0]), 0.5), 1.75);
        assert_eq!(discounted_return(&traj(vec![0.0; 5]), 0.9), 0.0);
        assert_eq!(discounted_return(&traj(vec![-2.5]), 0.3), -2.5);
    }

    fn bandit_policy(theta: f64, sigma: f64) -> AbPolicy {
        let p = PolicyParams::new(PolicyArch::linear(1, 1).unwrap(), vec![theta]).unwrap();
        AbPolicy::new(p, NoiseSpec::gaussian(1, sigma).unwrap()).unwrap()
    }

    #[test]
    fn gpomdp_single_step_is_likelihood_ratio() {
        let env = Env::Bandit(BanditSpec::new(1, 1.0, 1, 1.0).unwrap());
        let pol = bandit_policy(0.2, 0.3);
        let mut rng = stream(4);
        let trajs: Vec<_> = (0..50)
            .map(|_| rollout(&env, Actor::Stochastic(&pol), &mut rng, None).unwrap())
            .collect();
        let est = gpomdp_estimate(&trajs, &pol, 0.9).unwrap();
        let manual: f64 = trajs
            .iter()
            .map(|t| {
                pol.log_policy_gradient(&t.states[0], &t.actions[0])
                    .unwrap()[0]
                    * t.rewards[0]
            })
            .sum::<f64>()
            / 50.0;
        assert!((est.grad[0] - manual).abs() < 1e-12);
    }

    #[test]
    fn gpomdp_zero_rewards_give_zero_gradient() {
        let env = Env::Bandit(BanditSpec::new(1, 1.0, 4, 1.0).unwrap());
        // far outside the support of f: reward is identically zero
        let pol = bandit_policy(-10.0, 0.1);
        let mut rng = stream(1);
        let trajs: Vec<_> = (0..10)
            .map(|_| rollout(&env, Actor::Stochastic(&pol), &mut rng, None).unwrap())
            .collect();
        let est = gpomdp_estimate(&trajs, &pol, 1.0).unwrap();
        assert_eq!(est.grad, vec![0.0]);
        assert_eq!(est.per_sample_trace_variance, 0.0);
    }

    #[test]
    fn gpomdp_weights_rewards_by_causal_score_sums() {
        let pol = bandit_policy(0.0, 1.0);
        let t = Trajectory {
            states: vec![vec![1.0]; 3],
            actions: vec![vec![0.5], vec![-1.0], vec![2.0]],
            rewards: vec![1.0, 2.0, 3.0],
            ..Trajectory::default()
        };
        // scores are a - θ = (0.5, -1, 2); partial sums (0.5, -0.5, 1.5)
        let g = gpomdp_contribution(&t, &pol, 0.5).unwrap();
        let expected = 0.5 * 1.0 + (-0.5) * 0.5 * 2.0 + 1.5 * 0.25 * 3.0;
        assert!((g[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn pgpe_examples() {
        let mean = PolicyParams::new(PolicyArch::linear(1, 2).unwrap(), vec![0.1, -0.2]).unwrap();
        let hyper = PbHyperpolicy::new(mean.clone(), NoiseSpec::gaussian(2, 0.5).unwrap()).unwrap();
        let th = mean.with_theta(vec![0.4, -0.1]).unwrap();
        let one = pgpe_estimate(&[(th.clone(), 2.0)], &hyper).unwrap();
        let score = hyper.log_gradient(&th).unwrap();
        assert_eq!(one.grad, vec![score[0] * 2.0, score[1] * 2.0]);
        assert_eq!(one.per_sample_trace_variance, 0.0);

        let plus = mean.with_theta(vec![0.4, 0.1]).unwrap();
        let minus = mean.with_theta(vec![-0.2, -0.5]).unwrap();
        let sym = pgpe_estimate(&[(plus, 3.0), (minus, 3.0)], &hyper).unwrap();
        assert!(sym.grad.iter().all(|g| g.abs() < 1e-15));

        assert!(matches!(pgpe_estimate(&[], &hyper), Err(Error::EmptyBatch)));
    }

    #[test]
    fn finite_differences_examples() {
        let g = finite_difference_gradient(|x, _| x[0] * x[0], &[3.0], 1e-4, 0).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_difference_gradient(|_, _| 4.2, &[1.0, 2.0], 1e-3, 0).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        // analytic bandit objective on the descending branch
        let b = BanditSpec::new(2, 1.5, 3, 0.8).unwrap();
        let g = finite_difference_gradient(|x, _| b.jd_analytic(x).unwrap(), &[0.3, 0.5], 1e-5, 0)
            .unwrap();
        let slope = -b.horizon_factor() * 1.5 / (2.0 * 2.0);
        for gi in g {
            assert!((gi - slope).abs() < 1e-8);
        }
        assert!(finite_difference_gradient(|_, _| 0.0, &[1.0], 0.0, 0).is_err());
    }

    #[test]
    fn finite_differences_share_the_seed() {
        let seen = std::cell::RefCell::new(vec![]);
        finite_difference_gradient(
            |_, s| {
                seen.borrow_mut().push(s);
                0.0
            },
            &[0.0, 0.0],
            0.1,
            77,
        )
        .unwrap();
        assert!(seen.borrow().iter().all(|&s| s == 77));
    }

    #[test]
    fn probe_of_zero_estimator_is_zero() {
        let rows = variance_scaling_probe(|_, _| Ok(vec![0.0, 0.0]), &[10, 40], 100).unwrap();
        assert!(rows.iter().all(|r| r.trace_variance == 0.0));
        assert!(variance_scaling_probe(|_, _| Ok(vec![0.0]), &[10], 99).is_err());
    }

    #[test]
    fn variance_csv_layout() {
        let rows = vec![VarianceRow {
            batch_size: 10,
            trace_variance: 0.5,
            reps: 200,
        }];
        let mut buf = vec![];
        write_variance_csv(&mut buf, &rows, 0.3, "pgpe", "bandit").unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "N,trace_variance,reps,sigma,algo,env\n10,0.5,200,0.3,pgpe,bandit\n"
        );
    }
}
