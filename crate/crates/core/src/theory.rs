//! Closed-form constants and bounds: Lipschitz and smoothness constants of
//! the three objectives, estimator variance bounds, deployment gaps, step
//! sizes, sample complexities and weak-gradient-domination transfer.
//!
//! The sharper per-lemma expressions are the default. [`ConstantsReport`]
//! can also render the simplified table forms for comparison.

use std::fmt::{self, Write as _};

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optimize::theory_step_branches;

/// Episode length: a finite `T` or an infinite horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Horizon {
    Finite(u64),
    #[default]
    Infinite,
}

impl Horizon {
    /// `1 - γᵀ` (1 for an infinite horizon).
    pub fn discount_mass(&self, gamma: f64) -> f64 {
        match *self {
            Horizon::Finite(t) => 1.0 - gamma.powf(t as f64),
            Horizon::Infinite => 1.0,
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_u64(*t),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Null => Ok(Horizon::Infinite),
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|&t| t > 0)
                .map(Horizon::Finite)
                .ok_or_else(|| de::Error::custom("T must be a positive integer")),
            serde_json::Value::String(s)
                if matches!(s.as_str(), "inf" | "infinite" | "infinity") =>
            {
                Ok(Horizon::Infinite)
            }
            other => Err(de::Error::custom(format!(
                "T must be a positive integer or \"inf\", got {other}"
            ))),
        }
    }
}

/// Regularity constants of the MDP and the deterministic policy class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConstants {
    /// Lipschitz constant of the transition kernel in the action.
    #[serde(rename = "L_p")]
    pub l_p: f64,
    /// Lipschitz constant of the reward in the action.
    #[serde(rename = "L_r")]
    pub l_r: f64,
    #[serde(rename = "L_2p")]
    pub l_2p: f64,
    #[serde(rename = "L_2r")]
    pub l_2r: f64,
    /// Lipschitz constant of `θ ↦ μ_θ(s)`.
    #[serde(rename = "L_mu")]
    pub l_mu: f64,
    #[serde(rename = "L_2mu")]
    pub l_2mu: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub gamma: f64,
    #[serde(rename = "T", default)]
    pub horizon: Horizon,
    /// Score constant: `E‖∇ log φ‖² ≤ c d / σ²`.
    pub c: f64,
    pub d_theta: usize,
    pub d_action: usize,
}

impl RegularityConstants {
    /// All constants 1, `γ = 1/2`, infinite horizon, one dimension.
    pub fn unit() -> Self {
        Self {
            l_p: 1.0,
            l_r: 1.0,
            l_2p: 1.0,
            l_2r: 1.0,
            l_mu: 1.0,
            l_2mu: 1.0,
            r_max: 1.0,
            gamma: 0.5,
            horizon: Horizon::Infinite,
            c: 1.0,
            d_theta: 1,
            d_action: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("L_p", self.l_p),
            ("L_r", self.l_r),
            ("L_2p", self.l_2p),
            ("L_2r", self.l_2r),
            ("L_mu", self.l_mu),
            ("L_2mu", self.l_2mu),
            ("R_max", self.r_max),
            ("c", self.c),
        ];
        for (name, x) in named {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::invalid(
                    "constants",
                    format!("{name} must be finite and >= 0"),
                ));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        Ok(())
    }

    /// Every formula with a `(1-γ)⁻¹` factor needs `γ < 1`.
    fn require_discounted(&self) -> Result<f64> {
        self.validate()?;
        if self.gamma >= 1.0 {
            return Err(Error::invalid(
                "gamma",
                "bounds with (1 - gamma)^-1 factors need gamma < 1",
            ));
        }
        Ok(1.0 - self.gamma)
    }

    fn discount_mass(&self) -> f64 {
        self.horizon.discount_mass(self.gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exploration {
    /// Action-based (GPOMDP).
    Action,
    /// Parameter-based (PGPE).
    Parameter,
}

impl Exploration {
    pub fn algo_name(&self) -> &'static str {
        match self {
            Exploration::Action => "gpomdp",
            Exploration::Parameter => "pgpe",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzConstants {
    /// Lipschitz constant of the return in the action sequence.
    pub l: f64,
    /// `L_J = L · L_μ`, Lipschitz constant of `J_D` in θ.
    pub l_j: f64,
    gamma: f64,
    horizon: Horizon,
    lp_rmax: f64,
    l_r: f64,
}

impl LipschitzConstants {
    /// Per-step sensitivity `L_t ≤ (γ^{t+1} - γᵀ)/(1-γ) L_p R_max + γᵗ L_r`
    /// (zero for `t ≥ T`).
    pub fn l_t(&self, t: u64) -> f64 {
        let g = self.gamma;
        let tail = match self.horizon {
            Horizon::Finite(horizon) if t >= horizon => return 0.0,
            Horizon::Finite(horizon) => g.powf(horizon as f64),
            Horizon::Infinite => 0.0,
        };
        (g.powf(t as f64 + 1.0) - tail) / (1.0 - g) * self.lp_rmax + g.powf(t as f64) * self.l_r
    }
}

/// `L = γ(1-γᵀ)/(1-γ)² L_p R_max + (1-γᵀ)/(1-γ) L_r`, `L_J = L L_μ`.
pub fn lipschitz_constants(rc: &RegularityConstants) -> Result<LipschitzConstants> {
    let om = rc.require_discounted()?;
    let mass = rc.discount_mass();
    let l = rc.gamma * mass / (om * om) * rc.l_p * rc.r_max + mass / om * rc.l_r;
    Ok(LipschitzConstants {
        l,
        l_j: l * rc.l_mu,
        gamma: rc.gamma,
        horizon: rc.horizon,
        lp_rmax: rc.l_p * rc.r_max,
        l_r: rc.l_r,
    })
}

/// Smoothness constant `L₂` of `J_D` (requires smooth MDP and policy).
pub fn smoothness_l2(rc: &RegularityConstants) -> Result<f64> {
    let om = rc.require_discounted()?;
    let g = rc.gamma;
    let mu2 = rc.l_mu * rc.l_mu;
    Ok(
        g * (1.0 + g) * mu2 * rc.l_p * rc.l_p * rc.r_max / om.powi(3)
            + g * (2.0 * mu2 * rc.l_p * rc.l_r + rc.l_2mu * rc.l_2p * rc.r_max) / (om * om)
            + rc.l_2mu * rc.l_2r / om,
    )
}

/// Which bound attains the minimum in [`objective_smoothness`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothnessBranch {
    /// `L₂` of the deterministic objective.
    Deterministic,
    /// The noise-induced bound `∝ 1/σ²`.
    Noise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessBound {
    pub value: f64,
    pub branch: SmoothnessBranch,
}

/// Noise-induced smoothness of `J_P` or `J_A`, or `None` when the action
/// noise bound does not apply (`σ_A ≥ √d_A`).
pub fn noise_smoothness(
    rc: &RegularityConstants,
    which: Exploration,
    sigma: f64,
) -> Result<Option<f64>> {
    let om = rc.require_discounted()?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be > 0"));
    }
    let base = rc.r_max * rc.c / (sigma * sigma * om * om);
    Ok(match which {
        Exploration::Parameter => Some(base * (rc.d_theta as f64 + 1.0)),
        Exploration::Action => {
            if sigma < (rc.d_action as f64).sqrt() {
                Some(base * (rc.d_action as f64 + 1.0) * (rc.l_mu * rc.l_mu + rc.l_2mu))
            } else {
                None
            }
        }
    })
}

/// `L_{2,†} ≤ min{L₂, noise bound}`.
pub fn objective_smoothness(
    rc: &RegularityConstants,
    which: Exploration,
    sigma: f64,
) -> Result<SmoothnessBound> {
    let l2 = smoothness_l2(rc)?;
    let noise = noise_smoothness(rc, which, sigma)?;
    Ok(match noise {
        Some(n) if n < l2 => SmoothnessBound {
            value: n,
            branch: SmoothnessBranch::Noise,
        },
        _ => SmoothnessBound {
            value: l2,
            branch: SmoothnessBranch::Deterministic,
        },
    })
}

/// `V` such that `Var[∇̂J] ≤ V/N`:
/// PGPE `R²(c d_Θ/σ²)(1-γᵀ)²/(1-γ)²`, GPOMDP `R²(c d_A L_μ²/σ²)(1-γᵀ)/(1-γ)³`.
pub fn variance_bounds(rc: &RegularityConstants, which: Exploration, sigma: f64) -> Result<f64> {
    let om = rc.require_discounted()?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be > 0"));
    }
    let r2 = rc.r_max * rc.r_max;
    let mass = rc.discount_mass();
    Ok(match which {
        Exploration::Parameter => {
            r2 * rc.c * rc.d_theta as f64 / (sigma * sigma) * mass * mass / (om * om)
        }
        Exploration::Action => {
            r2 * rc.c * rc.d_action as f64 * rc.l_mu * rc.l_mu / (sigma * sigma) * mass / om.powi(3)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeploymentGap {
    /// `sup_θ |J_D(θ) - J_†(θ)| ≤ L √d σ`
    pub uniform: f64,
    /// `J_D* - J_D(θ_†*) ≤ 2 L √d σ`
    pub suboptimality: f64,
    /// Worst-case lower bound `0.28 L √d σ`.
    pub tightness_floor: f64,
}

/// Pass `L_J, d_Θ, σ_P` for parameter noise and `L, d_A, σ_A` for action noise.
pub fn deployment_gap_bound(lipschitz: f64, d: usize, sigma: f64) -> DeploymentGap {
    let uniform = lipschitz * (d as f64).sqrt() * sigma;
    DeploymentGap {
        uniform,
        suboptimality: 2.0 * uniform,
        tightness_floor: 0.28 * uniform,
    }
}

/// `σ = ε / (6 L √d)`, which makes the deployment term `3 L √d σ = ε/2`.
pub fn sigma_adaptive(epsilon: f64, lipschitz: f64, d: usize) -> Result<f64> {
    if !(epsilon > 0.0) || !(lipschitz > 0.0) || d == 0 {
        return Err(Error::invalid(
            "sigma_adaptive",
            "epsilon, L and d must be positive",
        ));
    }
    Ok(epsilon / (6.0 * lipschitz * (d as f64).sqrt()))
}

/// Weak gradient domination `J* - J(θ) ≤ α‖∇J(θ)‖ + β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WgdParams {
    pub alpha: f64,
    pub beta: f64,
}

impl WgdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta >= 0.0) {
            return Err(Error::invalid("wgd", "need alpha > 0 and beta >= 0"));
        }
        Ok(Self { alpha, beta })
    }
}

/// `16 α⁴ L₂ V / ε³`, the polynomial part of the sample complexity.
pub fn sample_complexity_prefactor(wgd: &WgdParams, l2: f64, v: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    Ok(16.0 * wgd.alpha.powi(4) * l2 * v / epsilon.powi(3))
}

/// `NK = 16 α⁴ L₂ V / ε³ · log(max{0, j_gap - β}/ε)` with `j_gap = J* - J(θ₀)`;
/// zero when the log argument is at most 1.
pub fn sample_complexity(
    wgd: &WgdParams,
    l2: f64,
    v: f64,
    epsilon: f64,
    j_gap: f64,
) -> Result<f64> {
    let pre = sample_complexity_prefactor(wgd, l2, v, epsilon)?;
    let arg = (j_gap - wgd.beta).max(0.0) / epsilon;
    Ok(if arg <= 1.0 { 0.0 } else { pre * arg.ln() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceCurve {
    /// Upper bound on `J* - E[J(θ_k)]` for `k = 1..=K`.
    pub bounds: Vec<f64>,
    /// `β + √(L₂ V ζ / (μ N))`.
    pub asymptote: f64,
}

/// Bound sequence `β + (1 - ½√(μ ζ³ L₂ V / N))ᵏ gap + √(L₂ V ζ / (μ N))`.
pub fn convergence_curve(
    wgd: &WgdParams,
    l2: f64,
    v: f64,
    n: f64,
    zeta: f64,
    iterations: usize,
    j_gap: f64,
) -> Result<ConvergenceCurve> {
    if iterations == 0 {
        return Err(Error::invalid("K", "must be at least 1"));
    }
    let branches = theory_step_branches(wgd.alpha, wgd.beta, l2, v, n, j_gap)?;
    let slack = 1.0 + 1e-12;
    for (name, limit) in [
        ("1/L2", branches.smoothness),
        ("1/(mu gap)", branches.gap),
        ("(N/(L2 V mu))^(1/3)", branches.variance),
    ] {
        if !(zeta > 0.0) || zeta > limit * slack {
            return Err(Error::invalid(
                "zeta",
                format!("step {zeta} violates the {name} branch ({limit})"),
            ));
        }
    }
    let mu = 1.0 / (wgd.alpha * wgd.alpha);
    let gap = (j_gap - wgd.beta).max(0.0);
    let rate = 1.0 - 0.5 * (mu * zeta.powi(3) * l2 * v / n).sqrt();
    let asymptote = wgd.beta + (l2 * v * zeta / (mu * n)).sqrt();
    let mut bounds = Vec::with_capacity(iterations);
    let mut contraction = 1.0;
    for _ in 0..iterations {
        contraction *= rate;
        bounds.push(asymptote + contraction * gap);
    }
    Ok(ConvergenceCurve { bounds, asymptote })
}

/// Inputs for transferring weak gradient domination to a stochastic objective.
#[derive(Clone, Debug, PartialEq)]
pub enum WgdTransfer {
    /// From `J_D` to `J_P`: `β_P = β_D + (α_D L₂ + L_P) σ_P √d_Θ`.
    InheritedPb {
        deterministic: WgdParams,
        l2: f64,
        l_p: f64,
        sigma_p: f64,
        d_theta: usize,
    },
    /// From `J_D` to `J_A`: `β_A = β_D + (α_D ψ + L_A) σ_A √d_A`, ψ from the constants.
    InheritedAb {
        deterministic: WgdParams,
        constants: RegularityConstants,
        l_a: f64,
        sigma_a: f64,
    },
    /// Fisher non-degeneracy: `α = C √d_A σ_A / λ_exp`, `β = √ε_bias / (1-γ)`.
    Fisher {
        c: f64,
        d_action: usize,
        sigma_a: f64,
        lambda_exp: f64,
        eps_bias: f64,
        gamma: f64,
    },
}

/// `ψ = L_μ (L_p² R γ/(1-γ)⁴ + (L_r L_p + R L_2p + L_p L_r γ)/(1-γ)² + L_2r/(1-γ)) (1-γᵀ)`.
pub fn inherited_ab_psi(rc: &RegularityConstants) -> Result<f64> {
    let om = rc.require_discounted()?;
    let g = rc.gamma;
    Ok(rc.l_mu
        * (rc.l_p * rc.l_p * rc.r_max * g / om.powi(4)
            + (rc.l_r * rc.l_p + rc.r_max * rc.l_2p + rc.l_p * rc.l_r * g) / (om * om)
            + rc.l_2r / om)
        * rc.discount_mass())
}

pub fn wgd_transfer(transfer: &WgdTransfer) -> Result<WgdParams> {
    match transfer {
        WgdTransfer::InheritedPb {
            deterministic,
            l2,
            l_p,
            sigma_p,
            d_theta,
        } => WgdParams::new(
            deterministic.alpha,
            deterministic.beta
                + (deterministic.alpha * l2 + l_p) * sigma_p * (*d_theta as f64).sqrt(),
        ),
        WgdTransfer::InheritedAb {
            deterministic,
            constants,
            l_a,
            sigma_a,
        } => {
            let psi = inherited_ab_psi(constants)?;
            WgdParams::new(
                deterministic.alpha,
                deterministic.beta
                    + (deterministic.alpha * psi + l_a)
                        * sigma_a
                        * (constants.d_action as f64).sqrt(),
            )
        }
        WgdTransfer::Fisher {
            c,
            d_action,
            sigma_a,
            lambda_exp,
            eps_bias,
            gamma,
        } => {
            if !(*lambda_exp > 0.0) {
                return Err(Error::invalid("lambda_exp", "must be > 0"));
            }
            if !(*gamma < 1.0) {
                return Err(Error::invalid("gamma", "must be < 1"));
            }
            if !(*eps_bias >= 0.0) {
                return Err(Error::invalid("eps_bias", "must be >= 0"));
            }
            WgdParams::new(
                c * (*d_action as f64).sqrt() * sigma_a / lambda_exp,
                eps_bias.sqrt() / (1.0 - gamma),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Rate table
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaRegime {
    Fixed,
    /// `σ = ε / (6 L √d)`.
    Adaptive,
}

/// Inputs of the rate table that are not regularity constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateInputs {
    pub epsilon: f64,
    pub sigma_p: f64,
    pub sigma_a: f64,
    pub wgd: WgdParams,
    /// `J* - J(θ₀)`.
    pub j_gap: f64,
}

impl Default for RateInputs {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            sigma_p: 0.1,
            sigma_a: 0.1,
            wgd: WgdParams {
                alpha: 1.0,
                beta: 0.0,
            },
            j_gap: 1.0,
        }
    }
}

/// Scaling exponents `NK ∝ d^dim σ^-sigma (1-γ)^-horizon ε^-epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateExponents {
    pub epsilon: i32,
    pub horizon: i32,
    pub dim: i32,
    /// Only for fixed-σ rows.
    pub sigma: Option<i32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateCell {
    pub exploration: Exploration,
    pub regime: SigmaRegime,
    pub smoothness: bool,
    pub sigma: f64,
    pub l2: f64,
    pub variance: f64,
    pub prefactor: f64,
    pub nk: f64,
    pub exponents: RateExponents,
    /// Largest distance of a measured log₂-ratio from its rounded exponent.
    pub exponent_residual: f64,
    /// False when the noise smoothness bound was used outside its validity
    /// region (`σ_A ≥ √d_A`).
    pub valid: bool,
}

struct CellValues {
    sigma: f64,
    l2: f64,
    v: f64,
    valid: bool,
}

fn cell_values(
    rc: &RegularityConstants,
    which: Exploration,
    regime: SigmaRegime,
    smoothness: bool,
    epsilon: f64,
    fixed_sigma: f64,
) -> Result<CellValues> {
    let d = match which {
        Exploration::Parameter => rc.d_theta,
        Exploration::Action => rc.d_action,
    };
    let sigma = match regime {
        SigmaRegime::Fixed => fixed_sigma,
        SigmaRegime::Adaptive => {
            let lc = lipschitz_constants(rc)?;
            let l = match which {
                Exploration::Parameter => lc.l_j,
                Exploration::Action => lc.l,
            };
            sigma_adaptive(epsilon, l, d)?
        }
    };
    let (l2, valid) = if smoothness {
        (smoothness_l2(rc)?, true)
    } else {
        match noise_smoothness(rc, which, sigma)? {
            Some(v) => (v, true),
            None => {
                // report the formula value but mark the cell
                let om = 1.0 - rc.gamma;
                let d_a = rc.d_action as f64;
                (
                    rc.r_max * rc.c * (d_a + 1.0) * (rc.l_mu * rc.l_mu + rc.l_2mu)
                        / (sigma * sigma * om * om),
                    false,
                )
            }
        }
    };
    let v = variance_bounds(rc, which, sigma)?;
    Ok(CellValues {
        sigma,
        l2,
        v,
        valid,
    })
}

fn log2_ratio(a: f64, b: f64) -> f64 {
    (b / a).log2()
}

/// Sample-complexity bounds for the eight (algorithm × σ regime × smoothness)
/// combinations, each with scaling exponents measured by doubling one
/// variable at a time (`ε` halved, `1-γ` halved near γ = 1 with `T = ∞`,
/// `d` doubled around 2²⁰, `σ` halved) and reading off the log₂-ratio of the
/// polynomial prefactor.
pub fn rate_table(rc: &RegularityConstants, inputs: &RateInputs) -> Result<Vec<RateCell>> {
    rc.require_discounted()?;
    let mut cells = Vec::with_capacity(8);
    for which in [Exploration::Action, Exploration::Parameter] {
        for regime in [SigmaRegime::Fixed, SigmaRegime::Adaptive] {
            for smoothness in [false, true] {
                let fixed_sigma = match which {
                    Exploration::Parameter => inputs.sigma_p,
                    Exploration::Action => inputs.sigma_a,
                };
                let pre = |rc: &RegularityConstants, eps: f64, sigma: f64| -> Result<f64> {
                    let cv = cell_values(rc, which, regime, smoothness, eps, sigma)?;
                    sample_complexity_prefactor(&inputs.wgd, cv.l2, cv.v, eps)
                };
                let base = cell_values(rc, which, regime, smoothness, inputs.epsilon, fixed_sigma)?;
                let prefactor =
                    sample_complexity_prefactor(&inputs.wgd, base.l2, base.v, inputs.epsilon)?;
                let nk =
                    sample_complexity(&inputs.wgd, base.l2, base.v, inputs.epsilon, inputs.j_gap)?;

                let mut raw = Vec::new();
                // ε
                let e_raw = log2_ratio(
                    pre(rc, inputs.epsilon, fixed_sigma)?,
                    pre(rc, inputs.epsilon / 2.0, fixed_sigma)?,
                );
                raw.push(e_raw);
                // (1-γ), infinite horizon, γ → 1
                let near = |k: i32| RegularityConstants {
                    gamma: 1.0 - 2f64.powi(-k),
                    horizon: Horizon::Infinite,
                    ..rc.clone()
                };
                let h_raw = log2_ratio(
                    pre(&near(20), inputs.epsilon, fixed_sigma)?,
                    pre(&near(21), inputs.epsilon, fixed_sigma)?,
                );
                raw.push(h_raw);
                // d
                let with_dim = |d: usize| {
                    let mut c = rc.clone();
                    match which {
                        Exploration::Parameter => c.d_theta = d,
                        Exploration::Action => c.d_action = d,
                    }
                    c
                };
                let d_raw = log2_ratio(
                    pre(&with_dim(1 << 20), inputs.epsilon, fixed_sigma)?,
                    pre(&with_dim(1 << 21), inputs.epsilon, fixed_sigma)?,
                );
                raw.push(-d_raw);
                // σ
                let s_raw = match regime {
                    SigmaRegime::Fixed => {
                        let r = log2_ratio(
                            pre(rc, inputs.epsilon, fixed_sigma)?,
                            pre(rc, inputs.epsilon, fixed_sigma / 2.0)?,
                        );
                        raw.push(r);
                        Some(r)
                    }
                    SigmaRegime::Adaptive => None,
                };
                let residual = raw
                    .iter()
                    .map(|r| (r - r.round()).abs())
                    .fold(0.0, f64::max);
                cells.push(RateCell {
                    exploration: which,
                    regime,
                    smoothness,
                    sigma: base.sigma,
                    l2: base.l2,
                    variance: base.v,
                    prefactor,
                    nk,
                    exponents: RateExponents {
                        epsilon: e_raw.round() as i32,
                        horizon: h_raw.round() as i32,
                        dim: d_raw.round() as i32,
                        sigma: s_raw.map(|r| r.round() as i32),
                    },
                    exponent_residual: residual,
                    valid: base.valid,
                });
            }
        }
    }
    Ok(cells)
}

pub fn rate_table_csv(cells: &[RateCell]) -> String {
    let mut out = String::from(
        "algo,sigma_regime,smoothness,sigma,L2,V,prefactor,NK,eps_exp,horizon_exp,dim_exp,sigma_exp,valid\n",
    );
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.exploration.algo_name(),
            match c.regime {
                SigmaRegime::Fixed => "fixed",
                SigmaRegime::Adaptive => "adaptive",
            },
            if c.smoothness { "with" } else { "without" },
            c.sigma,
            c.l2,
            c.variance,
            c.prefactor,
            c.nk,
            c.exponents.epsilon,
            c.exponents.horizon,
            c.exponents.dim,
            c.exponents.sigma.map(|s| s.to_string()).unwrap_or_default(),
            c.valid
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Constants report
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    /// Per-lemma expressions (the values every other function returns).
    Lemma,
    /// Simplified table cells: `L_A` without the leading γ, `2 L_p²` in
    /// `L₂`, `R_max` to the first power in `V`, infinite horizon.
    Table1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsReport {
    pub mode: RenderMode,
    pub l_a: f64,
    pub l_p: f64,
    pub l2: f64,
    pub l2_noise_a: f64,
    pub l2_noise_p: f64,
    pub v_a: f64,
    pub v_p: f64,
    pub sigma_a: f64,
    pub sigma_p: f64,
}

impl ConstantsReport {
    pub fn new(
        rc: &RegularityConstants,
        sigma_a: f64,
        sigma_p: f64,
        mode: RenderMode,
    ) -> Result<Self> {
        let om = rc.require_discounted()?;
        if !(sigma_a > 0.0 && sigma_p > 0.0) {
            return Err(Error::invalid("sigma", "must be > 0"));
        }
        let noise_a = rc.r_max * rc.c * (rc.d_action as f64 + 1.0) * (rc.l_mu * rc.l_mu + rc.l_2mu)
            / (sigma_a * sigma_a * om * om);
        let noise_p = rc.r_max * rc.c * (rc.d_theta as f64 + 1.0) / (sigma_p * sigma_p * om * om);
        Ok(match mode {
            RenderMode::Lemma => {
                let lc = lipschitz_constants(rc)?;
                Self {
                    mode,
                    l_a: lc.l,
                    l_p: lc.l_j,
                    l2: smoothness_l2(rc)?,
                    l2_noise_a: noise_a,
                    l2_noise_p: noise_p,
                    v_a: variance_bounds(rc, Exploration::Action, sigma_a)?,
                    v_p: variance_bounds(rc, Exploration::Parameter, sigma_p)?,
                    sigma_a,
                    sigma_p,
                }
            }
            RenderMode::Table1 => {
                let l_a = rc.l_p * rc.r_max / (om * om) + rc.l_r / om;
                let mu2 = rc.l_mu * rc.l_mu;
                Self {
                    mode,
                    l_a,
                    l_p: l_a * rc.l_mu,
                    l2: 2.0 * rc.l_p * rc.l_p * mu2 * rc.r_max / om.powi(3)
                        + (2.0 * mu2 * rc.l_p * rc.l_r + rc.l_2mu * rc.l_2p * rc.r_max) / (om * om)
                        + rc.l_2mu * rc.l_2r / om,
                    l2_noise_a: noise_a,
                    l2_noise_p: noise_p,
                    v_a: rc.r_max * rc.c * rc.d_action as f64 * mu2
                        / (sigma_a * sigma_a * om.powi(3)),
                    v_p: rc.r_max * rc.c * rc.d_theta as f64 / (sigma_p * sigma_p * om * om),
                    sigma_a,
                    sigma_p,
                }
            }
        })
    }
}

impl fmt::Display for ConstantsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            RenderMode::Lemma => "lemma",
            RenderMode::Table1 => "table1",
        };
        writeln!(
            f,
            "constants ({mode} form, sigma_A = {}, sigma_P = {})",
            self.sigma_a, self.sigma_p
        )?;
        writeln!(
            f,
            "  L_A  (Lipschitz, action noise)     {:>14.6e}",
            self.l_a
        )?;
        writeln!(
            f,
            "  L_P  (Lipschitz, parameter noise)  {:>14.6e}",
            self.l_p
        )?;
        writeln!(f, "  L_2  (smoothness of J_D)           {:>14.6e}", self.l2)?;
        writeln!(
            f,
            "  L_2A (noise smoothness bound)      {:>14.6e}",
            self.l2_noise_a
        )?;
        writeln!(
            f,
            "  L_2P (noise smoothness bound)      {:>14.6e}",
            self.l2_noise_p
        )?;
        writeln!(
            f,
            "  V_A  (GPOMDP variance bound)       {:>14.6e}",
            self.v_a
        )?;
        write!(
            f,
            "  V_P  (PGPE variance bound)         {:>14.6e}",
            self.v_p
        )
    }
}
