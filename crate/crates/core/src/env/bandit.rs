//! Single-state bandit with a piecewise-linear, asymmetric reward.
//!
//! Each action coordinate is scored by
//!
//! ```text
//!          ⎧ 0              x < -1/L or x > 2/L
//! f(x) =   ⎨ L x + 1        -1/L ≤ x < 0
//!          ⎩ 1 - (L/2) x    0 ≤ x ≤ 2/L
//! ```
//!
//! and `r(s, a) = (1/d) Σᵢ f(aᵢ)`. With a linear policy on the constant
//! state `s = 1` the action equals the parameter, so the deterministic
//! objective is available in closed form, and so is its smoothing by uniform
//! noise (the convolution of a piecewise-linear function with a box kernel).
//! The maximizer of the smoothed objective sits at `σ/√3`, away from the
//! deterministic maximizer at 0, which makes this the worst case for
//! deploying a policy trained with parameter noise.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditSpec {
    pub dim: usize,
    pub lipschitz: f64,
    pub horizon: usize,
    pub gamma: f64,
}

impl BanditSpec {
    pub fn new(dim: usize, lipschitz: f64, horizon: usize, gamma: f64) -> Result<Self> {
        let spec = Self {
            dim,
            lipschitz,
            horizon,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::invalid("lipschitz", "must be finite and > 0"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("T", "horizon must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// `Σ_{t<T} γᵗ`: `(1-γᵀ)/(1-γ)`, or `T` when γ = 1.
    pub fn horizon_factor(&self) -> f64 {
        if self.gamma == 1.0 {
            self.horizon as f64
        } else {
            (1.0 - self.gamma.powi(self.horizon as i32)) / (1.0 - self.gamma)
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        let l = self.lipschitz;
        if x < -1.0 / l || x > 2.0 / l {
            0.0
        } else if x < 0.0 {
            l * x + 1.0
        } else {
            1.0 - 0.5 * l * x
        }
    }

    /// `∫_{-∞}^x f(t) dt`.
    fn f_integral(&self, x: f64) -> f64 {
        let l = self.lipschitz;
        if x < -1.0 / l {
            0.0
        } else if x < 0.0 {
            0.5 * l * x * x + x + 0.5 / l
        } else if x <= 2.0 / l {
            0.5 / l + x - 0.25 * l * x * x
        } else {
            1.5 / l
        }
    }

    pub fn reward(&self, action: &[f64]) -> Result<f64> {
        check_dim("bandit action", self.dim, action.len())?;
        Ok(action.iter().map(|&a| self.f(a)).sum::<f64>() / self.dim as f64)
    }

    /// `J_D(θ) = (Σ_t γᵗ) · (1/d) Σᵢ f(θᵢ)`.
    pub fn jd_analytic(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.horizon_factor() * self.reward(theta)?)
    }

    /// Smoothed per-coordinate reward `(f * ψ_σ)(x)` for the box kernel of
    /// half-width `√3 σ`, evaluated by exact integration.
    pub fn smoothed_f(&self, x: f64, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return self.f(x);
        }
        let w = 3f64.sqrt() * sigma;
        (self.f_integral(x + w) - self.f_integral(x - w)) / (2.0 * w)
    }

    /// Closed quadratic form of the smoothed reward, valid when the kernel
    /// straddles the peak without leaving the support:
    /// `x - √3σ ∈ [-1/L, 0)` and `x + √3σ ∈ [0, 2/L]`.
    pub fn smoothed_f_peak_window(&self, x: f64, sigma: f64) -> Option<f64> {
        let l = self.lipschitz;
        let w = 3f64.sqrt() * sigma;
        let (lo, hi) = (x - w, x + w);
        if sigma > 0.0 && lo >= -1.0 / l && lo < 0.0 && hi >= 0.0 && hi <= 2.0 / l {
            Some(1.0 - (0.5 * l * lo * lo + 0.25 * l * hi * hi) / (2.0 * w))
        } else {
            None
        }
    }

    /// `J_P(θ) = E_{ε ~ Uni}[J_D(θ + ε)]` for uniform hypercube noise.
    pub fn jp_analytic(&self, theta: &[f64], sigma: f64) -> Result<f64> {
        check_dim("bandit theta", self.dim, theta.len())?;
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma", "must be >= 0"));
        }
        if 3f64.sqrt() * sigma > 1.0 / self.lipschitz {
            return Err(Error::invalid("sigma", "requires sqrt(3) sigma <= 1/L"));
        }
        let mean = theta
            .iter()
            .map(|&x| {
                self.smoothed_f_peak_window(x, sigma)
                    .unwrap_or_else(|| self.smoothed_f(x, sigma))
            })
            .sum::<f64>()
            / self.dim as f64;
        Ok(self.horizon_factor() * mean)
    }

    /// Lipschitz constant of `J_D` in θ: `(Σ_t γᵗ) · L / √d`.
    pub fn jd_lipschitz(&self) -> f64 {
        self.horizon_factor() * self.lipschitz / (self.dim as f64).sqrt()
    }
}
