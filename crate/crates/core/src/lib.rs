//! Policy gradients with white-noise exploration and deterministic deployment.
//!
//! The crate learns deterministic control policies with two stochastic
//! exploration schemes:
//!
//! * **action-based** (GPOMDP): white noise is added to the action at
//!   every step of a trajectory;
//! * **parameter-based** (PGPE): white noise is added to the policy
//!   parameters once per trajectory.
//!
//! After training, the noise is switched off and the deterministic policy is
//! deployed. The [`theory`] module evaluates the bounds that relate the
//! deployed return to the stochastic objectives, and the [`env`] module
//! provides two environments whose objectives are known in closed form (a
//! diagonal LQR and a piecewise-linear bandit) so the bounds can be checked.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod estimator;
pub mod noise;
pub mod numeric;
pub mod optimize;
pub mod policy;
pub mod seed;
pub mod svg;
pub mod theory;
pub mod train;

pub use error::{Error, Result};
