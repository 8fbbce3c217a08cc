//! Gradient-ascent step rules and the constant step sizes prescribed by the
//! convergence analysis.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{all_finite, norm};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Constant,
    Adam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub zeta: f64,
    /// Rescale gradients whose norm exceeds this before stepping.
    pub max_grad_norm: Option<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, zeta: f64, dim: usize) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::invalid("step_size", "must be finite and > 0"));
        }
        Ok(Self {
            kind,
            zeta,
            max_grad_norm: None,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        })
    }

    pub fn with_max_grad_norm(mut self, max_norm: Option<f64>) -> Self {
        self.max_grad_norm = max_norm;
        self
    }

    /// One ascent step `θ ← θ + Δ(g)`. Pure: returns the new parameters and
    /// the new state. `iteration` is only used to label errors.
    pub fn step(
        &self,
        theta: &[f64],
        grad: &[f64],
        iteration: usize,
    ) -> Result<(Vec<f64>, OptimizerState)> {
        check_dim("gradient", theta.len(), grad.len())?;
        check_dim("optimizer state", self.m.len(), grad.len())?;
        if !all_finite(grad) {
            return Err(Error::NonFiniteGradient { iteration });
        }
        let scale = match self.max_grad_norm {
            Some(max) => {
                let n = norm(grad);
                if n > max {
                    max / n
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let mut next = self.clone();
        let mut theta = theta.to_vec();
        match self.kind {
            OptimizerKind::Constant => {
                for (x, g) in theta.iter_mut().zip(grad) {
                    *x += self.zeta * scale * g;
                }
            }
            OptimizerKind::Adam => {
                next.t += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(next.t as i32);
                let bc2 = 1.0 - ADAM_BETA2.powi(next.t as i32);
                for j in 0..theta.len() {
                    let g = scale * grad[j];
                    next.m[j] = ADAM_BETA1 * next.m[j] + (1.0 - ADAM_BETA1) * g;
                    next.v[j] = ADAM_BETA2 * next.v[j] + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = next.m[j] / bc1;
                    let v_hat = next.v[j] / bc2;
                    theta[j] += self.zeta * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        Ok((theta, next))
    }
}

fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {x}"),
        ))
    }
}

/// The three branches bounding an admissible constant step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepBranches {
    pub smoothness: f64,
    /// `+∞` when the initial gap is zero.
    pub gap: f64,
    pub variance: f64,
}

impl StepBranches {
    pub fn min(&self) -> f64 {
        self.smoothness.min(self.gap).min(self.variance)
    }
}

/// Branches of `ζ ≤ min{1/L₂, 1/(μ·gap), (N/(L₂ V μ))^{1/3}}` with `μ = 1/α²`
/// and `gap = max{0, j_gap - β}`, where `j_gap = J* - J(θ₀)`.
pub fn theory_step_branches(
    alpha: f64,
    beta: f64,
    l2: f64,
    v: f64,
    n: f64,
    j_gap: f64,
) -> Result<StepBranches> {
    require_positive("alpha", alpha)?;
    require_positive("L2", l2)?;
    require_positive("V", v)?;
    require_positive("N", n)?;
    if !(beta >= 0.0) || !(j_gap >= 0.0) {
        return Err(Error::invalid("beta/j_gap", "must be >= 0"));
    }
    let mu = 1.0 / (alpha * alpha);
    let gap = (j_gap - beta).max(0.0);
    Ok(StepBranches {
        smoothness: 1.0 / l2,
        gap: if gap == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (mu * gap)
        },
        variance: (n / (l2 * v * mu)).cbrt(),
    })
}

pub fn theory_constant_step(
    alpha: f64,
    beta: f64,
    l2: f64,
    v: f64,
    n: f64,
    j_gap: f64,
) -> Result<f64> {
    Ok(theory_step_branches(alpha, beta, l2, v, n, j_gap)?.min())
}

/// `ζ = ε² μ N / (4 L₂ V) = ε² N / (4 α² L₂ V)`.
pub fn theory_epsilon_step(alpha: f64, l2: f64, v: f64, n: f64, epsilon: f64) -> Result<f64> {
    for (name, x) in [
        ("alpha", alpha),
        ("L2", l2),
        ("V", v),
        ("N", n),
        ("epsilon", epsilon),
    ] {
        require_positive(name, x)?;
    }
    Ok(epsilon * epsilon * n / (4.0 * alpha * alpha * l2 * v))
}
