//! Environments with closed-form objectives and the rollout loop.

mod bandit;
mod lqr;

pub use bandit::BanditSpec;
pub use lqr::{LqrOptimum, LqrSpec, Mat2, SATURATION_NORM};

use rand::Rng;

use crate::error::{check_dim, Result};
use crate::numeric::norm;
use crate::policy::{AbPolicy, PolicyParams};
use crate::seed::stream;

#[derive(Clone, Debug, PartialEq)]
pub enum Env {
    Lqr(LqrSpec),
    Bandit(BanditSpec),
}

impl Env {
    pub fn name(&self) -> &'static str {
        match self {
            Env::Lqr(_) => "lqr",
            Env::Bandit(_) => "bandit",
        }
    }

    /// Dimension of the state fed to the policy (the bandit exposes a
    /// constant one-dimensional state `s = 1`).
    pub fn state_dim(&self) -> usize {
        match self {
            Env::Lqr(_) => 2,
            Env::Bandit(_) => 1,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Env::Lqr(_) => 2,
            Env::Bandit(b) => b.dim,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Env::Lqr(l) => l.horizon,
            Env::Bandit(b) => b.horizon,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Env::Lqr(l) => l.gamma,
            Env::Bandit(b) => b.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Env::Lqr(l) => l.validate(),
            Env::Bandit(b) => b.validate(),
        }
    }

    /// Whether returns are a deterministic function of the policy.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Env::Lqr(l) => l.init_range == 0.0,
            Env::Bandit(_) => true,
        }
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Env::Lqr(l) => l.initial_state(rng),
            Env::Bandit(_) => vec![1.0],
        }
    }

    pub fn step(&self, state: &[f64], action: &[f64]) -> Result<(Vec<f64>, f64)> {
        match self {
            Env::Lqr(l) => l.step(state, action),
            Env::Bandit(b) => Ok((state.to_vec(), b.reward(action)?)),
        }
    }
}

/// Who picks the actions during a rollout.
#[derive(Clone, Copy, Debug)]
pub enum Actor<'a> {
    /// `a = μ_θ(s) + ε` with fresh ε every step.
    Stochastic(&'a AbPolicy),
    /// `a = μ_θ(s)` for the whole trajectory.
    Deterministic(&'a PolicyParams),
}

impl Actor<'_> {
    fn params(&self) -> &PolicyParams {
        match self {
            Actor::Stochastic(p) => &p.params,
            Actor::Deterministic(p) => p,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    /// Actions as sampled by the policy (before any clipping).
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// Parameters the trajectory was played with, for parameter-noise runs.
    pub sampled_theta: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Set when the LQR state norm exceeded [`SATURATION_NORM`].
    pub saturated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Play one episode of `env.horizon()` steps.
///
/// The generator is consumed in a fixed order: initial state first, then the
/// action noise of each step (stochastic actors only). `clip` bounds the
/// action seen by the environment; the stored action is the unclipped one.
pub fn rollout<R: Rng + ?Sized>(
    env: &Env,
    actor: Actor<'_>,
    rng: &mut R,
    clip: Option<(f64, f64)>,
) -> Result<Trajectory> {
    let params = actor.params();
    check_dim("policy state", env.state_dim(), params.arch.state_dim)?;
    check_dim("policy action", env.action_dim(), params.arch.action_dim)?;

    let horizon = env.horizon();
    let mut traj = Trajectory {
        states: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        ..Trajectory::default()
    };
    let mut state = env.initial_state(rng);
    for _ in 0..horizon {
        let action = match actor {
            Actor::Stochastic(p) => p.sample_action(&state, rng)?.0,
            Actor::Deterministic(p) => p.act(&state)?,
        };
        let (next, reward) = match clip {
            Some((lo, hi)) => {
                let clipped: Vec<f64> = action.iter().map(|a| a.clamp(lo, hi)).collect();
                env.step(&state, &clipped)?
            }
            None => env.step(&state, &action)?,
        };
        if matches!(env, Env::Lqr(_)) && !(norm(&next) <= SATURATION_NORM) {
            traj.saturated = true;
        }
        traj.states.push(std::mem::replace(&mut state, next));
        traj.actions.push(action);
        traj.rewards.push(reward);
    }
    Ok(traj)
}

/// [`rollout`] on a fresh stream, recording the seed in the trajectory.
pub fn rollout_seeded(
    env: &Env,
    actor: Actor<'_>,
    seed: u64,
    clip: Option<(f64, f64)>,
) -> Result<Trajectory> {
    let mut traj = rollout(env, actor, &mut stream(seed), clip)?;
    traj.seed = Some(seed);
    Ok(traj)
}
