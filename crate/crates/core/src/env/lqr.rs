//! Two-dimensional linear-quadratic regulator with a uniform initial state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::golden_section_max;

pub type Mat2 = [[f64; 2]; 2];

/// States with a norm beyond this are reported as saturated.
pub const SATURATION_NORM: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqrSpec {
    pub a: Mat2,
    pub b: Mat2,
    pub q: Mat2,
    pub r: Mat2,
    pub horizon: usize,
    pub gamma: f64,
    /// Each initial coordinate is drawn from `Uni([-init_range, init_range])`.
    pub init_range: f64,
}

impl Default for LqrSpec {
    fn default() -> Self {
        Self {
            a: [[0.9, 0.0], [0.0, 0.9]],
            b: [[0.9, 0.0], [0.0, 0.9]],
            q: [[0.9, 0.0], [0.0, 0.1]],
            r: [[0.1, 0.0], [0.0, 0.9]],
            horizon: 50,
            gamma: 1.0,
            init_range: 3.0,
        }
    }
}

fn matvec(m: &Mat2, x: &[f64]) -> [f64; 2] {
    [
        m[0][0] * x[0] + m[0][1] * x[1],
        m[1][0] * x[0] + m[1][1] * x[1],
    ]
}

fn quad(m: &Mat2, x: &[f64]) -> f64 {
    let mx = matvec(m, x);
    x[0] * mx[0] + x[1] * mx[1]
}

fn matmul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn is_diagonal(m: &Mat2) -> bool {
    m[0][1] == 0.0 && m[1][0] == 0.0
}

/// Optimal decoupled stationary gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LqrOptimum {
    /// Diagonal of the gain matrix `K*` (`u = K* x`).
    pub gains: [f64; 2],
    /// Expected discounted return of `K*` (a non-positive number).
    pub value: f64,
}

impl LqrSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("T", "horizon must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1]"));
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(Error::invalid("init_range", "must be finite and >= 0"));
        }
        if !is_diagonal(&self.q) || !is_diagonal(&self.r) {
            return Err(Error::invalid("Q/R", "Q and R must be diagonal"));
        }
        if self.q[0][0] < 0.0 || self.q[1][1] < 0.0 {
            return Err(Error::invalid("Q", "diagonal entries must be nonnegative"));
        }
        if self.r[0][0] <= 0.0 || self.r[1][1] <= 0.0 {
            return Err(Error::invalid("R", "diagonal entries must be positive"));
        }
        Ok(())
    }

    /// `E[x₀ x₀ᵀ]` diagonal entry.
    pub fn init_second_moment(&self) -> f64 {
        self.init_range * self.init_range / 3.0
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..2)
            .map(|_| {
                let u: f64 = rng.random();
                self.init_range * (2.0 * u - 1.0)
            })
            .collect()
    }

    /// `x' = A x + B u`, `r = -xᵀ Q x - uᵀ R u`.
    pub fn step(&self, state: &[f64], action: &[f64]) -> Result<(Vec<f64>, f64)> {
        check_dim("lqr state", 2, state.len())?;
        check_dim("lqr action", 2, action.len())?;
        let ax = matvec(&self.a, state);
        let bu = matvec(&self.b, action);
        let reward = -quad(&self.q, state) - quad(&self.r, action);
        Ok((vec![ax[0] + bu[0], ax[1] + bu[1]], reward))
    }

    /// Exact expected discounted return of the stationary linear policy
    /// `u = K x` (`theta` is `K` row-major), averaged over the initial-state
    /// distribution via the second-moment recursion `Σ ← M Σ Mᵀ`.
    pub fn linear_policy_return(&self, theta: &[f64]) -> Result<f64> {
        check_dim("lqr gain", 4, theta.len())?;
        let k: Mat2 = [[theta[0], theta[1]], [theta[2], theta[3]]];
        let closed = {
            let bk = matmul(&self.b, &k);
            [
                [self.a[0][0] + bk[0][0], self.a[0][1] + bk[0][1]],
                [self.a[1][0] + bk[1][0], self.a[1][1] + bk[1][1]],
            ]
        };
        let ktrk = matmul(&transpose(&k), &matmul(&self.r, &k));
        let cost_m: Mat2 = [
            [self.q[0][0] + ktrk[0][0], self.q[0][1] + ktrk[0][1]],
            [self.q[1][0] + ktrk[1][0], self.q[1][1] + ktrk[1][1]],
        ];
        let m0 = self.init_second_moment();
        let mut sigma: Mat2 = [[m0, 0.0], [0.0, m0]];
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..self.horizon {
            let c = matmul(&cost_m, &sigma);
            total -= discount * (c[0][0] + c[1][1]);
            sigma = matmul(&closed, &matmul(&sigma, &transpose(&closed)));
            discount *= self.gamma;
        }
        Ok(total)
    }

    /// Expected discounted return of the scalar system `x' = (a + b k) x`
    /// with stage cost `(q + k² r) x²`.
    pub fn scalar_return(&self, coord: usize, gain: f64) -> f64 {
        let rho = self.a[coord][coord] + self.b[coord][coord] * gain;
        let stage = self.q[coord][coord] + gain * gain * self.r[coord][coord];
        let rho2 = rho * rho;
        let mut sum = 0.0;
        let mut factor = 1.0;
        for _ in 0..self.horizon {
            sum += factor;
            factor *= self.gamma * rho2;
        }
        -self.init_second_moment() * stage * sum
    }

    /// Best stationary diagonal gain, found per coordinate by golden-section
    /// search over `k ∈ [-2, 0]` on the closed-form scalar return.
    pub fn optimal_stationary_gain(&self) -> Result<LqrOptimum> {
        for (name, m) in [
            ("A", &self.a),
            ("B", &self.b),
            ("Q", &self.q),
            ("R", &self.r),
        ] {
            if !is_diagonal(m) {
                return Err(Error::invalid(
                    "lqr",
                    format!("{name} must be diagonal for the oracle"),
                ));
            }
        }
        let mut gains = [0.0; 2];
        let mut value = 0.0;
        for (i, g) in gains.iter_mut().enumerate() {
            *g = golden_section_max(|k| self.scalar_return(i, k), -2.0, 0.0, 1e-12);
            value += self.scalar_return(i, *g);
        }
        Ok(LqrOptimum { gains, value })
    }
}
