//! Experiment configuration: strict JSON parsing, dot-path overrides and
//! validation with field-path diagnostics.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::env::{BanditSpec, Env, LqrSpec, Mat2};
use crate::error::{Error, Result};
use crate::noise::{NoiseKind, NoiseSpec};
use crate::optimize::{OptimizerKind, OptimizerState};
use crate::policy::{PolicyArch, PolicyKind};

pub const DEFAULT_EVAL_EVERY: usize = 10;
pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Lqr,
    Bandit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Pgpe,
    Gpomdp,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Pgpe => "pgpe",
            Algo::Gpomdp => "gpomdp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// σ_P for PGPE, σ_A for GPOMDP.
    pub sigma: f64,
}

/// A fully resolved experiment. Optional keys that have a documented default
/// are filled in by [`ExperimentConfig::resolve`], so a resolved config
/// serializes every value it runs with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvName,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub gamma: f64,

    /// Bandit action dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Bandit Lipschitz constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,

    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Mat2>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Mat2>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Mat2>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Mat2>,
    /// LQR initial state is uniform on `[-init_range, init_range]²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_range: Option<f64>,

    pub policy: PolicyKind,
    pub algo: Algo,
    pub noise: NoiseConfig,

    pub iterations: usize,
    pub batch: usize,
    pub optimizer: OptimizerKind,
    pub step_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_grad_norm: Option<f64>,

    pub master_seed: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_episodes: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_clip: Option<[f64; 2]>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_sq_values: Option<Vec<f64>>,
    #[serde(default = "default_repeat_seeds")]
    pub repeat_seeds: usize,
}

fn default_eval_every() -> usize {
    DEFAULT_EVAL_EVERY
}

fn default_repeat_seeds() -> usize {
    1
}

fn cfg_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::config(path, message)
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(path, format!("must be finite and > 0, got {x}")))
    }
}

impl ExperimentConfig {
    /// A small bandit configuration that trains in well under a second.
    pub fn bandit_smoke() -> Self {
        Self {
            env: EnvName::Bandit,
            horizon: 1,
            gamma: 1.0,
            dim: Some(1),
            lipschitz: Some(1.0),
            a: None,
            b: None,
            q: None,
            r: None,
            init_range: None,
            policy: PolicyKind::Linear,
            algo: Algo::Pgpe,
            noise: NoiseConfig {
                kind: NoiseKind::Gaussian,
                sigma: 0.1,
            },
            iterations: 10,
            batch: 10,
            optimizer: OptimizerKind::Constant,
            step_size: 0.05,
            max_grad_norm: None,
            master_seed: 0,
            eval_every: DEFAULT_EVAL_EVERY,
            eval_episodes: Some(1),
            theta0: Some(vec![-0.5]),
            action_clip: None,
            sigma_sq_values: None,
            repeat_seeds: 1,
        }
    }

    /// The LQR setting used for the convergence and variance studies
    /// (`T = 50`, `γ = 1`, Adam with step 0.01, `K = 3000`, `N = 100`).
    pub fn lqr_default(algo: Algo, sigma: f64) -> Self {
        Self {
            env: EnvName::Lqr,
            horizon: 50,
            gamma: 1.0,
            dim: None,
            lipschitz: None,
            a: None,
            b: None,
            q: None,
            r: None,
            init_range: None,
            policy: PolicyKind::Linear,
            algo,
            noise: NoiseConfig {
                kind: NoiseKind::Gaussian,
                sigma,
            },
            iterations: 3000,
            batch: 100,
            optimizer: OptimizerKind::Adam,
            step_size: 0.01,
            max_grad_norm: None,
            master_seed: 0,
            eval_every: DEFAULT_EVAL_EVERY,
            eval_episodes: None,
            theta0: None,
            action_clip: None,
            sigma_sq_values: None,
            repeat_seeds: 1,
        }
        .resolve()
        .expect("built-in LQR config is valid")
    }

    /// Parse a JSON document, apply `key=value` overrides, fill defaults and
    /// validate.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| cfg_err("<root>", e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self =
            serde_json::from_value(value).map_err(|e| cfg_err("<root>", e.to_string()))?;
        cfg.resolve()
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            cfg_err(
                path.display().to_string(),
                format!("cannot read config: {e}"),
            )
        })?;
        Self::from_json_str(&text, overrides)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fill documented defaults and validate.
    pub fn resolve(mut self) -> Result<Self> {
        if self.eval_episodes.is_none() {
            self.eval_episodes = Some(match self.env {
                EnvName::Bandit => 1,
                EnvName::Lqr => DEFAULT_EVAL_EPISODES,
            });
        }
        if self.env == EnvName::Bandit {
            self.dim.get_or_insert(1);
            self.lipschitz.get_or_insert(1.0);
        }
        self.validate()?;
        Ok(self)
    }

    /// Structural validation. `noise.sigma = 0` is accepted here (deployment
    /// only); [`ExperimentConfig::validate_for_training`] requires `σ > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(cfg_err("T", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(cfg_err("gamma", "must lie in (0, 1]"));
        }
        match self.env {
            EnvName::Bandit => {
                for (key, present) in [
                    ("A", self.a.is_some()),
                    ("B", self.b.is_some()),
                    ("Q", self.q.is_some()),
                    ("R", self.r.is_some()),
                    ("init_range", self.init_range.is_some()),
                ] {
                    if present {
                        return Err(cfg_err(key, "only valid for env \"lqr\""));
                    }
                }
                if self.dim == Some(0) {
                    return Err(cfg_err("dim", "must be at least 1"));
                }
                positive("lipschitz", self.lipschitz.unwrap_or(1.0))?;
            }
            EnvName::Lqr => {
                if self.dim.is_some() {
                    return Err(cfg_err("dim", "only valid for env \"bandit\""));
                }
                if self.lipschitz.is_some() {
                    return Err(cfg_err("lipschitz", "only valid for env \"bandit\""));
                }
            }
        }
        let env = self.env_spec()?;
        env.validate().map_err(|e| cfg_err("env", e.to_string()))?;

        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(cfg_err("noise.sigma", "must be finite and >= 0"));
        }
        if self.iterations == 0 {
            return Err(cfg_err("iterations", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(cfg_err("batch", "must be at least 1"));
        }
        positive("step_size", self.step_size)?;
        if let Some(m) = self.max_grad_norm {
            positive("max_grad_norm", m)?;
        }
        if self.eval_every == 0 {
            return Err(cfg_err("eval_every", "must be at least 1"));
        }
        if self.eval_episodes == Some(0) {
            return Err(cfg_err("eval_episodes", "must be at least 1"));
        }
        if let Some(t0) = &self.theta0 {
            let want = self.arch()?.param_count();
            if t0.len() != want {
                return Err(cfg_err(
                    "theta0",
                    format!("expected {want} values, got {}", t0.len()),
                ));
            }
            if !t0.iter().all(|x| x.is_finite()) {
                return Err(cfg_err("theta0", "values must be finite"));
            }
        }
        if let Some([lo, hi]) = self.action_clip {
            if !(lo < hi) {
                return Err(cfg_err(
                    "action_clip",
                    "expected [low, high] with low < high",
                ));
            }
        }
        if let Some(values) = &self.sigma_sq_values {
            if values.is_empty() {
                return Err(cfg_err("sigma_sq_values", "needs at least one value"));
            }
            for (i, &v) in values.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(cfg_err(
                        format!("sigma_sq_values[{i}]"),
                        "must be finite and > 0",
                    ));
                }
            }
        }
        if self.repeat_seeds == 0 {
            return Err(cfg_err("repeat_seeds", "must be at least 1"));
        }
        Ok(())
    }

    pub fn validate_for_training(&self) -> Result<()> {
        self.validate()?;
        if !(self.noise.sigma > 0.0) {
            return Err(cfg_err("noise.sigma", "must be > 0 for training"));
        }
        if self.noise.kind != NoiseKind::Gaussian {
            return Err(cfg_err(
                "noise.kind",
                "training needs gaussian noise (the uniform score is undefined)",
            ));
        }
        Ok(())
    }

    pub fn env_spec(&self) -> Result<Env> {
        Ok(match self.env {
            EnvName::Bandit => Env::Bandit(BanditSpec {
                dim: self.dim.unwrap_or(1),
                lipschitz: self.lipschitz.unwrap_or(1.0),
                horizon: self.horizon,
                gamma: self.gamma,
            }),
            EnvName::Lqr => {
                let d = LqrSpec::default();
                Env::Lqr(LqrSpec {
                    a: self.a.unwrap_or(d.a),
                    b: self.b.unwrap_or(d.b),
                    q: self.q.unwrap_or(d.q),
                    r: self.r.unwrap_or(d.r),
                    horizon: self.horizon,
                    gamma: self.gamma,
                    init_range: self.init_range.unwrap_or(d.init_range),
                })
            }
        })
    }

    pub fn arch(&self) -> Result<PolicyArch> {
        let env = self.env_spec()?;
        PolicyArch::new(self.policy, env.state_dim(), env.action_dim())
    }

    /// Noise on parameters (PGPE) or actions (GPOMDP).
    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let dim = match self.algo {
            Algo::Pgpe => self.arch()?.param_count(),
            Algo::Gpomdp => self.env_spec()?.action_dim(),
        };
        NoiseSpec::new(self.noise.kind, dim, self.noise.sigma)
    }

    pub fn optimizer_state(&self) -> Result<OptimizerState> {
        Ok(
            OptimizerState::new(self.optimizer, self.step_size, self.arch()?.param_count())?
                .with_max_grad_norm(self.max_grad_norm),
        )
    }

    pub fn eval_episodes(&self) -> usize {
        self.eval_episodes.unwrap_or(match self.env {
            EnvName::Bandit => 1,
            EnvName::Lqr => DEFAULT_EVAL_EPISODES,
        })
    }

    pub fn clip(&self) -> Option<(f64, f64)> {
        self.action_clip.map(|[lo, hi]| (lo, hi))
    }

    /// Same experiment with a different noise scale.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            noise: NoiseConfig {
                sigma,
                ..self.noise
            },
            ..self.clone()
        }
    }
}

/// Short aliases accepted by `--set`.
fn canonical_key(key: &str) -> &str {
    match key {
        "sigma" => "noise.sigma",
        "seed" => "master_seed",
        other => other,
    }
}

/// Apply one `dotted.key=value` patch. The value is read as JSON when it
/// parses (numbers, booleans, arrays, quoted strings) and as a bare string
/// otherwise, so `algo=gpomdp` works without quotes.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| cfg_err(assignment, "override must look like key=value"))?;
    let key = canonical_key(key.trim());
    if key.is_empty() {
        return Err(cfg_err(assignment, "empty override key"));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| cfg_err(parts[..depth].join("."), "is not an object"))?;
        if depth + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "env": "bandit", "T": 1, "gamma": 1.0,
        "policy": "linear", "algo": "pgpe",
        "noise": {"kind": "gaussian", "sigma": 0.1},
        "iterations": 10, "batch": 10,
        "optimizer": "constant", "step_size": 0.05,
        "master_seed": 7
    }"#;

    #[test]
    fn minimal_bandit_round_trips() {
        let cfg = ExperimentConfig::from_json_str(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.eval_episodes, Some(1));
        assert_eq!(cfg.eval_every, 10);
        let again = ExperimentConfig::from_json_str(&cfg.to_json_pretty(), &[]).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn sigma_override_patches_noise() {
        let cfg = ExperimentConfig::from_json_str(MINIMAL, &["sigma=0.5".into()]).unwrap();
        assert_eq!(cfg.noise.sigma, 0.5);
        let cfg = ExperimentConfig::from_json_str(
            MINIMAL,
            &["algo=gpomdp".into(), "noise.kind=\"gaussian\"".into()],
        )
        .unwrap();
        assert_eq!(cfg.algo, Algo::Gpomdp);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("\"master_seed\"", "\"sgima\": 1, \"master_seed\"");
        let err = ExperimentConfig::from_json_str(&text, &[])
            .unwrap_err()
            .to_string();
        assert!(err.contains("sgima"), "{err}");
        let err = ExperimentConfig::from_json_str(MINIMAL, &["noise.sgima=1".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("sgima"), "{err}");
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let err = ExperimentConfig::from_json_str(MINIMAL, &["batch=0".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("`batch`"), "{err}");
        let err = ExperimentConfig::from_json_str(MINIMAL, &["sigma_sq_values=[0.1,-1]".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("sigma_sq_values[1]"), "{err}");
        let err = ExperimentConfig::from_json_str(MINIMAL, &["A=[[1,0],[0,1]]".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("`A`"), "{err}");
    }

    #[test]
    fn zero_sigma_is_deployment_only() {
        let cfg = ExperimentConfig::from_json_str(MINIMAL, &["sigma=0".into()]).unwrap();
        assert!(cfg.validate_for_training().is_err());
    }

    #[test]
    fn lqr_defaults_fill_in() {
        let cfg = ExperimentConfig::lqr_default(Algo::Gpomdp, 0.01);
        assert_eq!(cfg.eval_episodes, Some(100));
        assert_eq!(cfg.env_spec().unwrap(), Env::Lqr(LqrSpec::default()));
        assert_eq!(cfg.noise_spec().unwrap().dim, 2);
        assert_eq!(cfg.with_sigma(0.1).noise.sigma, 0.1);
    }

    #[test]
    fn malformed_overrides_are_rejected() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "T.x=1").is_err());
    }
}
