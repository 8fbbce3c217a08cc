//! White-noise distributions: zero mean, `E‖ε‖² ≤ d σ²`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `N(0, σ² I)`
    Gaussian,
    /// Independent `Uni([-√3σ, √3σ])` coordinates (variance σ² each).
    /// Sampling only: the density is not differentiable.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub dim: usize,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        Ok(Self { kind, dim, sigma })
    }

    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, dim, sigma)
    }

    pub fn uniform(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Uniform, dim, sigma)
    }

    /// One draw of ε. With σ = 0 the zero vector is returned and the
    /// generator is not advanced.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        if self.sigma == 0.0 {
            out.fill(0.0);
            return;
        }
        match self.kind {
            NoiseKind::Gaussian => {
                for x in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = self.sigma * z;
                }
            }
            NoiseKind::Uniform => {
                let half_width = 3f64.sqrt() * self.sigma;
                for x in out.iter_mut() {
                    let u: f64 = rng.random();
                    *x = half_width * (2.0 * u - 1.0);
                }
            }
        }
    }

    fn require_score(&self) -> Result<()> {
        if self.kind != NoiseKind::Gaussian {
            return Err(Error::ScoreUndefined(self.kind));
        }
        if self.sigma <= 0.0 {
            return Err(Error::invalid("sigma", "score requires sigma > 0"));
        }
        Ok(())
    }

    /// `∇_ε log φ(ε) = -ε / σ²`.
    pub fn score_gradient(&self, eps: &[f64]) -> Result<Vec<f64>> {
        self.require_score()?;
        crate::error::check_dim("noise sample", self.dim, eps.len())?;
        let inv_var = 1.0 / (self.sigma * self.sigma);
        Ok(eps.iter().map(|e| -e * inv_var).collect())
    }

    /// `E‖∇ log φ(ε)‖² = d / σ²` for the isotropic Gaussian.
    pub fn score_second_moment(&self) -> Result<f64> {
        self.require_score()?;
        Ok(self.dim as f64 / (self.sigma * self.sigma))
    }

    /// `d σ²`, the white-noise second-moment bound (attained by both kinds).
    pub fn second_moment_bound(&self) -> f64 {
        self.dim as f64 * self.sigma * self.sigma
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentReport {
    /// Norm of the empirical mean vector.
    pub mean_norm: f64,
    /// Empirical `E‖ε‖²`.
    pub mean_sq_norm: f64,
    /// `d σ²`.
    pub bound: f64,
    pub n: usize,
}

impl MomentReport {
    /// `mean_sq_norm ≤ dσ²(1 + 5/√n)` and `mean_norm ≤ 5σ√(d/n)`.
    pub fn within_white_noise_bounds(&self, sigma: f64, dim: usize) -> bool {
        let n = self.n as f64;
        self.mean_sq_norm <= self.bound * (1.0 + 5.0 / n.sqrt())
            && self.mean_norm <= 5.0 * sigma * (dim as f64 / n).sqrt()
    }
}

pub fn empirical_moment_check<R: Rng + ?Sized>(
    noise: &NoiseSpec,
    n: usize,
    rng: &mut R,
) -> Result<MomentReport> {
    if n < 1000 {
        return Err(Error::invalid(
            "n",
            format!("need at least 1000 draws, got {n}"),
        ));
    }
    let mut sum = vec![0.0; noise.dim];
    let mut sq = 0.0;
    let mut eps = vec![0.0; noise.dim];
    for _ in 0..n {
        noise.sample_into(rng, &mut eps);
        for (s, e) in sum.iter_mut().zip(&eps) {
            *s += e;
        }
        sq += eps.iter().map(|e| e * e).sum::<f64>();
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    Ok(MomentReport {
        mean_norm: norm(&mean),
        mean_sq_norm: sq / nf,
        bound: noise.second_moment_bound(),
        n,
    })
}
