//! Deterministic policies `μ_θ`, the action-noise policy `π_θ` built on them
//! and the parameter-noise hyperpolicy `ν_θ`.
//!
//! Parameter layout:
//! * linear: `θ` is the `d_A × d_S` gain matrix flattened row-major, so
//!   `a = Θ s`;
//! * mlp: `d_S → 32 → 32 → d_A`, tanh hidden units, linear output. Layers are
//!   stored in order, each as its weight matrix (row-major, `out × in`)
//!   followed by its bias vector.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::noise::NoiseSpec;
use crate::numeric::all_finite;

pub const MLP_HIDDEN: [usize; 2] = [32, 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicyArch {
    pub kind: PolicyKind,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl PolicyArch {
    pub fn new(kind: PolicyKind, state_dim: usize, action_dim: usize) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::invalid(
                "arch",
                "state and action dimensions must be positive",
            ));
        }
        Ok(Self {
            kind,
            state_dim,
            action_dim,
        })
    }

    pub fn linear(state_dim: usize, action_dim: usize) -> Result<Self> {
        Self::new(PolicyKind::Linear, state_dim, action_dim)
    }

    pub fn mlp(state_dim: usize, action_dim: usize) -> Result<Self> {
        Self::new(PolicyKind::Mlp, state_dim, action_dim)
    }

    /// `(in, out)` of each dense layer.
    fn layers(&self) -> Vec<(usize, usize)> {
        match self.kind {
            PolicyKind::Linear => vec![(self.state_dim, self.action_dim)],
            PolicyKind::Mlp => vec![
                (self.state_dim, MLP_HIDDEN[0]),
                (MLP_HIDDEN[0], MLP_HIDDEN[1]),
                (MLP_HIDDEN[1], self.action_dim),
            ],
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            PolicyKind::Linear => self.state_dim * self.action_dim,
            PolicyKind::Mlp => self.layers().iter().map(|(i, o)| i * o + o).sum(),
        }
    }

    /// Zeros for linear policies, i.i.d. `N(0, 1)` for the MLP.
    pub fn initial_params<R: Rng + ?Sized>(&self, rng: &mut R) -> PolicyParams {
        let n = self.param_count();
        let theta = match self.kind {
            PolicyKind::Linear => vec![0.0; n],
            PolicyKind::Mlp => (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        PolicyParams { arch: *self, theta }
    }
}

/// A deterministic policy `μ_θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub arch: PolicyArch,
    pub theta: Vec<f64>,
}

struct MlpTrace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: Vec<f64>,
}

fn dense(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
    }
}

impl PolicyParams {
    pub fn new(arch: PolicyArch, theta: Vec<f64>) -> Result<Self> {
        check_dim("theta", arch.param_count(), theta.len())?;
        if !all_finite(&theta) {
            return Err(Error::invalid("theta", "entries must be finite"));
        }
        Ok(Self { arch, theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Same architecture, different parameter vector.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.arch, theta)
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        check_dim("state", self.arch.state_dim, state.len())
    }

    /// `μ_θ(s)`.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        Ok(match self.arch.kind {
            PolicyKind::Linear => {
                let mut a = vec![0.0; self.arch.action_dim];
                for (ai, row) in a
                    .iter_mut()
                    .zip(self.theta.chunks_exact(self.arch.state_dim))
                {
                    *ai = row.iter().zip(state).map(|(t, s)| t * s).sum();
                }
                a
            }
            PolicyKind::Mlp => self.mlp_forward(state).out,
        })
    }

    fn mlp_slices(&self) -> [(&[f64], &[f64]); 3] {
        let mut rest = self.theta.as_slice();
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head
        };
        let (ds, da) = (self.arch.state_dim, self.arch.action_dim);
        let [h1, h2] = MLP_HIDDEN;
        let w1 = take(h1 * ds);
        let b1 = take(h1);
        let w2 = take(h2 * h1);
        let b2 = take(h2);
        let w3 = take(da * h2);
        let b3 = take(da);
        [(w1, b1), (w2, b2), (w3, b3)]
    }

    fn mlp_forward(&self, state: &[f64]) -> MlpTrace {
        let [(w1, b1), (w2, b2), (w3, b3)] = self.mlp_slices();
        let mut h1 = vec![0.0; MLP_HIDDEN[0]];
        dense(w1, b1, state, &mut h1);
        h1.iter_mut().for_each(|x| *x = x.tanh());
        let mut h2 = vec![0.0; MLP_HIDDEN[1]];
        dense(w2, b2, &h1, &mut h2);
        h2.iter_mut().for_each(|x| *x = x.tanh());
        let mut out = vec![0.0; self.arch.action_dim];
        dense(w3, b3, &h2, &mut out);
        MlpTrace { h1, h2, out }
    }

    /// `∇_θ μ_θ(s)ᵀ v`, a vector in parameter space.
    pub fn jacobian_tvp(&self, state: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        check_dim("tvp vector", self.arch.action_dim, v.len())?;
        match self.arch.kind {
            PolicyKind::Linear => {
                let mut g = Vec::with_capacity(self.theta.len());
                for vi in v {
                    g.extend(state.iter().map(|s| vi * s));
                }
                Ok(g)
            }
            PolicyKind::Mlp => Ok(self.mlp_backward(state, v)),
        }
    }

    fn mlp_backward(&self, state: &[f64], v: &[f64]) -> Vec<f64> {
        let trace = self.mlp_forward(state);
        let [_, (w2, _), (w3, _)] = self.mlp_slices();
        let (ds, da) = (self.arch.state_dim, self.arch.action_dim);
        let [n1, n2] = MLP_HIDDEN;

        let mut grad = vec![0.0; self.theta.len()];
        let (g_w1, rest) = grad.split_at_mut(n1 * ds);
        let (g_b1, rest) = rest.split_at_mut(n1);
        let (g_w2, rest) = rest.split_at_mut(n2 * n1);
        let (g_b2, rest) = rest.split_at_mut(n2);
        let (g_w3, g_b3) = rest.split_at_mut(da * n2);

        // output layer
        for o in 0..da {
            g_b3[o] = v[o];
            for j in 0..n2 {
                g_w3[o * n2 + j] = v[o] * trace.h2[j];
            }
        }
        // second hidden layer
        let mut delta2 = vec![0.0; n2];
        for j in 0..n2 {
            let back: f64 = (0..da).map(|o| w3[o * n2 + j] * v[o]).sum();
            delta2[j] = back * (1.0 - trace.h2[j] * trace.h2[j]);
        }
        for j in 0..n2 {
            g_b2[j] = delta2[j];
            for i in 0..n1 {
                g_w2[j * n1 + i] = delta2[j] * trace.h1[i];
            }
        }
        // first hidden layer
        for i in 0..n1 {
            let back: f64 = (0..n2).map(|j| w2[j * n1 + i] * delta2[j]).sum();
            let delta1 = back * (1.0 - trace.h1[i] * trace.h1[i]);
            g_b1[i] = delta1;
            for s in 0..ds {
                g_w1[i * ds + s] = delta1 * state[s];
            }
        }
        grad
    }
}

/// Action-based white-noise policy `π_θ(·|s) = μ_θ(s) + ε`, ε redrawn every step.
#[derive(Clone, Debug, PartialEq)]
pub struct AbPolicy {
    pub params: PolicyParams,
    pub noise: NoiseSpec,
}

impl AbPolicy {
    pub fn new(params: PolicyParams, noise: NoiseSpec) -> Result<Self> {
        check_dim("action noise", params.arch.action_dim, noise.dim)?;
        Ok(Self { params, noise })
    }

    /// Returns `(μ_θ(s) + ε, ε)`.
    pub fn sample_action<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut action = self.params.act(state)?;
        let eps = self.noise.sample(rng);
        for (a, e) in action.iter_mut().zip(&eps) {
            *a += e;
        }
        Ok((action, eps))
    }

    /// `∇_θ log π_θ(a|s) = -∇_θ μ_θ(s) ∇_ε log φ(a - μ_θ(s))`.
    pub fn log_policy_gradient(&self, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        check_dim("action", self.params.arch.action_dim, action.len())?;
        let mean = self.params.act(state)?;
        let eps: Vec<f64> = action.iter().zip(&mean).map(|(a, m)| a - m).collect();
        let score = self.noise.score_gradient(&eps)?;
        let mut g = self.params.jacobian_tvp(state, &score)?;
        g.iter_mut().for_each(|x| *x = -*x);
        Ok(g)
    }
}

/// Parameter-based white-noise hyperpolicy `ν_θ`: `θ' = θ + ε`, ε redrawn per trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct PbHyperpolicy {
    pub mean: PolicyParams,
    pub noise: NoiseSpec,
}

impl PbHyperpolicy {
    pub fn new(mean: PolicyParams, noise: NoiseSpec) -> Result<Self> {
        check_dim("parameter noise", mean.dim(), noise.dim)?;
        Ok(Self { mean, noise })
    }

    /// Returns `(θ + ε, ε)`.
    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> (PolicyParams, Vec<f64>) {
        let eps = self.noise.sample(rng);
        let theta = self
            .mean
            .theta
            .iter()
            .zip(&eps)
            .map(|(t, e)| t + e)
            .collect();
        (
            PolicyParams {
                arch: self.mean.arch,
                theta,
            },
            eps,
        )
    }

    /// `∇_θ log ν_θ(θ') = (θ' - θ) / σ²`.
    pub fn log_gradient(&self, sampled: &PolicyParams) -> Result<Vec<f64>> {
        check_dim("sampled theta", self.mean.dim(), sampled.dim())?;
        let eps: Vec<f64> = sampled
            .theta
            .iter()
            .zip(&self.mean.theta)
            .map(|(s, m)| s - m)
            .collect();
        Ok(self
            .noise
            .score_gradient(&eps)?
            .into_iter()
            .map(|x| -x)
            .collect())
    }
}
