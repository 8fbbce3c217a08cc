//! C ABI over `wnpg`.
//!
//! Every fallible function returns a [`WnpgStatus`]; on failure the message
//! is kept in a thread-local slot readable with [`wnpg_last_error`]. Objects
//! cross the boundary as opaque handles that the caller releases with the
//! matching `_free` function. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use wnpg::config::ExperimentConfig;
use wnpg::env::BanditSpec;
use wnpg::error::Error;
use wnpg::policy::PolicyParams;
use wnpg::theory::{self, Exploration, Horizon, RegularityConstants, WgdParams};
use wnpg::train::{self, RunOptions, RunRecord};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WnpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Exploration family for the theory calculators.
pub const WNPG_EXPLORATION_ACTION: u32 = 0;
pub const WNPG_EXPLORATION_PARAMETER: u32 = 1;

/// Regularity constants. `horizon = 0` means an infinite horizon.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WnpgRegularityConstants {
    pub l_p: f64,
    pub l_r: f64,
    pub l_2p: f64,
    pub l_2r: f64,
    pub l_mu: f64,
    pub l_2mu: f64,
    pub r_max: f64,
    pub gamma: f64,
    pub horizon: u64,
    pub c: f64,
    pub d_theta: usize,
    pub d_action: usize,
}

impl From<&RegularityConstants> for WnpgRegularityConstants {
    fn from(rc: &RegularityConstants) -> Self {
        Self {
            l_p: rc.l_p,
            l_r: rc.l_r,
            l_2p: rc.l_2p,
            l_2r: rc.l_2r,
            l_mu: rc.l_mu,
            l_2mu: rc.l_2mu,
            r_max: rc.r_max,
            gamma: rc.gamma,
            horizon: match rc.horizon {
                Horizon::Finite(t) => t,
                Horizon::Infinite => 0,
            },
            c: rc.c,
            d_theta: rc.d_theta,
            d_action: rc.d_action,
        }
    }
}

impl From<&WnpgRegularityConstants> for RegularityConstants {
    fn from(rc: &WnpgRegularityConstants) -> Self {
        Self {
            l_p: rc.l_p,
            l_r: rc.l_r,
            l_2p: rc.l_2p,
            l_2r: rc.l_2r,
            l_mu: rc.l_mu,
            l_2mu: rc.l_2mu,
            r_max: rc.r_max,
            gamma: rc.gamma,
            horizon: match rc.horizon {
                0 => Horizon::Infinite,
                t => Horizon::Finite(t),
            },
            c: rc.c,
            d_theta: rc.d_theta,
            d_action: rc.d_action,
        }
    }
}

/// Parsed and validated experiment configuration.
pub struct WnpgConfig {
    inner: ExperimentConfig,
}

/// Result of one training run.
pub struct WnpgRun {
    record: RunRecord,
}

/// Deterministic policy `μ_θ` ready for deployment.
pub struct WnpgPolicy {
    params: PolicyParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(WnpgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config { .. } | Error::Json(_) => WnpgStatus::Config,
            Error::Io(_) => WnpgStatus::Io,
            Error::NonFiniteGradient { .. } => WnpgStatus::Numerical,
            _ => WnpgStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: WnpgStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> WnpgStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WnpgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            WnpgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a valid pointer or null
    unsafe { ptr.as_ref() }
        .ok_or_else(|| fail(WnpgStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller passes a valid pointer or null
    unsafe { ptr.as_mut() }
        .ok_or_else(|| fail(WnpgStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn c_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(fail(WnpgStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: non-null, NUL-terminated per the contract
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        fail(
            WnpgStatus::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(WnpgStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: ptr points to len readable doubles
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// Copy `values` into `buf`, always reporting the required length.
unsafe fn copy_out(
    values: &[f64],
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> Result<(), Failure> {
    if !needed.is_null() {
        // SAFETY: non-null output slot
        unsafe { *needed = values.len() };
    }
    if len < values.len() {
        return Err(fail(
            WnpgStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", values.len()),
        ));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(fail(WnpgStatus::NullPointer, "`buf` is null"));
        }
        // SAFETY: buf has room for len >= values.len() doubles
        unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    }
    Ok(())
}

fn exploration(which: u32) -> Result<Exploration, Failure> {
    match which {
        WNPG_EXPLORATION_ACTION => Ok(Exploration::Action),
        WNPG_EXPLORATION_PARAMETER => Ok(Exploration::Parameter),
        other => Err(fail(
            WnpgStatus::InvalidArgument,
            format!("unknown exploration {other}"),
        )),
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

// ---------------------------------------------------------------------------
// Errors and version
// ---------------------------------------------------------------------------

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wnpg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes,
/// or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wnpg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: buf has len bytes and n < len
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

/// Parse a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_config` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wnpg_config_from_json(
    json: *const c_char,
    out_config: *mut *mut WnpgConfig,
) -> WnpgStatus {
    guard(|| {
        let text = unsafe { c_str(json, "json") }?;
        let slot = unsafe { out(out_config, "out_config") }?;
        let inner = ExperimentConfig::from_json_str(text, &[])?;
        *slot = boxed(WnpgConfig { inner });
        Ok(())
    })
}

/// Load a JSON experiment config from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_config` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wnpg_config_load(
    path: *const c_char,
    out_config: *mut *mut WnpgConfig,
) -> WnpgStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        let slot = unsafe { out(out_config, "out_config") }?;
        let inner = ExperimentConfig::load(Path::new(path), &[])?;
        *slot = boxed(WnpgConfig { inner });
        Ok(())
    })
}

/// Apply one `key=value` override, e.g. `sigma=0.05` or `noise.kind=gaussian`.
/// The config is left unchanged on failure.
///
/// # Safety
/// `config` must be a live handle; `assignment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wnpg_config_set(
    config: *mut WnpgConfig,
    assignment: *const c_char,
) -> WnpgStatus {
    guard(|| {
        let cfg = unsafe { out(config, "config") }?;
        let assignment = unsafe { c_str(assignment, "assignment") }?;
        cfg.inner = ExperimentConfig::from_json_str(
            &cfg.inner.to_json_pretty(),
            &[assignment.to_string()],
        )?;
        Ok(())
    })
}

/// Serialize the resolved config as pretty JSON into `buf`. `needed`
/// receives the byte length including the terminating NUL.
///
/// # Safety
/// `config` must be a live handle; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wnpg_config_to_json(
    config: *const WnpgConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> WnpgStatus {
    guard(|| {
        let cfg = unsafe { deref(config, "config") }?;
        let text = cfg.inner.to_json_pretty();
        let total = text.len() + 1;
        if !needed.is_null() {
            unsafe { *needed = total };
        }
        if len < total {
            return Err(fail(
                WnpgStatus::BufferTooSmall,
                format!("buffer holds {len} bytes, need {total}"),
            ));
        }
        if buf.is_null() {
            return Err(fail(WnpgStatus::NullPointer, "`buf` is null"));
        }
        // SAFETY: buf has len >= total bytes
        unsafe {
            std::ptr::copy_nonoverlapping(text.as_ptr().cast(), buf, text.len());
            *buf.add(text.len()) = 0;
        }
        Ok(())
    })
}

/// Release a config. Null is ignored.
///
/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wnpg_config_free(config: *mut WnpgConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Train with `workers` threads (0 picks one per core). A diverged run is
/// still a successful call; query it with [`wnpg_run_diverged`].
///
/// # Safety
/// `config` must be a live handle; `out_run` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wnpg_train(
    config: *const WnpgConfig,
    workers: usize,
    out_run: *mut *mut WnpgRun,
) -> WnpgStatus {
    guard(|| {
        let cfg = unsafe { deref(config, "config") }?;
        let slot = unsafe { out(out_run, "out_run") }?;
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let record = train::train(&cfg.inner, &RunOptions::with_workers(workers))?;
        *slot = boxed(WnpgRun { record });
        Ok(())
    })
}

/// Number of logged iterations (always `K`).
///
/// # Safety
/// `run` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_iterations(run: *const WnpgRun) -> usize {
    unsafe { run.as_ref() }.map_or(0, |r| r.record.rows.len())
}

/// 1 if the run stopped early, 0 otherwise (or for null).
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_diverged(run: *const WnpgRun) -> i32 {
    unsafe { run.as_ref() }.map_or(0, |r| i32::from(!r.record.status.is_ok()))
}

/// Logged values at iteration `k` (1-based). Missing entries are NaN.
///
/// # Safety
/// `run` must be a live handle; each output pointer null or writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_row(
    run: *const WnpgRun,
    k: usize,
    j_hat: *mut f64,
    j_det: *mut f64,
    grad_norm: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let run = unsafe { deref(run, "run") }?;
        let row = k
            .checked_sub(1)
            .and_then(|i| run.record.rows.get(i))
            .ok_or_else(|| {
                fail(
                    WnpgStatus::InvalidArgument,
                    format!("iteration {k} out of range"),
                )
            })?;
        for (ptr, v) in [
            (j_hat, row.j_hat),
            (j_det, row.j_det),
            (grad_norm, row.grad_norm),
        ] {
            if let Some(slot) = unsafe { ptr.as_mut() } {
                *slot = v.unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

/// Final parameters. `needed` receives the parameter count even when the
/// buffer is too small.
///
/// # Safety
/// `run` must be a live handle; `buf` null or `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_theta(
    run: *const WnpgRun,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> WnpgStatus {
    guard(|| {
        let run = unsafe { deref(run, "run") }?;
        unsafe { copy_out(&run.record.theta_final, buf, len, needed) }
    })
}

/// Write record.csv, theta_final.f64, config.json and curves.svg to `dir`.
///
/// # Safety
/// Handles must be live; `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_write(
    run: *const WnpgRun,
    config: *const WnpgConfig,
    dir: *const c_char,
    force: bool,
) -> WnpgStatus {
    guard(|| {
        let run = unsafe { deref(run, "run") }?;
        let cfg = unsafe { deref(config, "config") }?;
        let dir = unsafe { c_str(dir, "dir") }?;
        train::write_run(Path::new(dir), &run.record, &cfg.inner, force)?;
        Ok(())
    })
}

/// Deterministic policy from the run's final parameters.
///
/// # Safety
/// `run` must be a live handle; `out_policy` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_policy(
    run: *const WnpgRun,
    out_policy: *mut *mut WnpgPolicy,
) -> WnpgStatus {
    guard(|| {
        let run = unsafe { deref(run, "run") }?;
        let slot = unsafe { out(out_policy, "out_policy") }?;
        *slot = boxed(WnpgPolicy {
            params: run.record.final_params()?,
        });
        Ok(())
    })
}

/// Release a run. Null is ignored.
///
/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wnpg_run_free(run: *mut WnpgRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Policy with the architecture implied by `config` and parameters `theta`.
///
/// # Safety
/// `config` must be a live handle; `theta` `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn wnpg_policy_new(
    config: *const WnpgConfig,
    theta: *const f64,
    len: usize,
    out_policy: *mut *mut WnpgPolicy,
) -> WnpgStatus {
    guard(|| {
        let cfg = unsafe { deref(config, "config") }?;
        let theta = unsafe { slice(theta, len, "theta") }?;
        let slot = unsafe { out(out_policy, "out_policy") }?;
        let params = PolicyParams::new(cfg.inner.arch()?, theta.to_vec())?;
        *slot = boxed(WnpgPolicy { params });
        Ok(())
    })
}

/// Noiseless action `μ_θ(s)`.
///
/// # Safety
/// `policy` must be a live handle; `state` `state_len` readable doubles;
/// `action` `action_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wnpg_policy_act(
    policy: *const WnpgPolicy,
    state: *const f64,
    state_len: usize,
    action: *mut f64,
    action_len: usize,
) -> WnpgStatus {
    guard(|| {
        let policy = unsafe { deref(policy, "policy") }?;
        let state = unsafe { slice(state, state_len, "state") }?;
        let a = policy.params.act(state)?;
        unsafe { copy_out(&a, action, action_len, std::ptr::null_mut()) }
    })
}

/// Mean and standard error of the deployed return over `episodes` episodes
/// of the environment in `config`.
///
/// # Safety
/// Handles must be live; outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_policy_deploy(
    policy: *const WnpgPolicy,
    config: *const WnpgConfig,
    episodes: usize,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let policy = unsafe { deref(policy, "policy") }?;
        let cfg = unsafe { deref(config, "config") }?;
        let est = train::deploy_deterministic(
            &policy.params,
            &cfg.inner.env_spec()?,
            episodes,
            seed,
            cfg.inner.clip(),
        )?;
        let m = unsafe { out(mean, "mean") }?;
        *m = est.mean;
        if let Some(se) = unsafe { std_error.as_mut() } {
            *se = est.std_error;
        }
        Ok(())
    })
}

/// Release a policy. Null is ignored.
///
/// # Safety
/// `policy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wnpg_policy_free(policy: *mut WnpgPolicy) {
    if !policy.is_null() {
        drop(unsafe { Box::from_raw(policy) });
    }
}

// ---------------------------------------------------------------------------
// Bandit objectives
// ---------------------------------------------------------------------------

fn bandit(dim: usize, lipschitz: f64, horizon: usize, gamma: f64) -> Result<BanditSpec, Failure> {
    Ok(BanditSpec::new(dim, lipschitz, horizon, gamma)?)
}

/// Deterministic bandit objective `J_D(θ)`, with `dim = len`.
///
/// # Safety
/// `theta` must point to `len` readable doubles; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_bandit_jd(
    lipschitz: f64,
    horizon: usize,
    gamma: f64,
    theta: *const f64,
    len: usize,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let theta = unsafe { slice(theta, len, "theta") }?;
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = bandit(len, lipschitz, horizon, gamma)?.jd_analytic(theta)?;
        Ok(())
    })
}

/// Bandit objective smoothed by uniform parameter noise of scale `sigma`.
///
/// # Safety
/// As [`wnpg_bandit_jd`].
#[no_mangle]
pub unsafe extern "C" fn wnpg_bandit_jp(
    lipschitz: f64,
    horizon: usize,
    gamma: f64,
    theta: *const f64,
    len: usize,
    sigma: f64,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let theta = unsafe { slice(theta, len, "theta") }?;
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = bandit(len, lipschitz, horizon, gamma)?.jp_analytic(theta, sigma)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Theory
// ---------------------------------------------------------------------------

/// All-ones constants with γ = 0.5, infinite horizon and unit dimensions.
///
/// # Safety
/// `out_rc` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_unit_constants(
    out_rc: *mut WnpgRegularityConstants,
) -> WnpgStatus {
    guard(|| {
        let slot = unsafe { out(out_rc, "out_rc") }?;
        *slot = (&RegularityConstants::unit()).into();
        Ok(())
    })
}

/// Lipschitz constants `L` and `L_J`.
///
/// # Safety
/// `rc` readable; outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_lipschitz(
    rc: *const WnpgRegularityConstants,
    l: *mut f64,
    l_j: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let rc: RegularityConstants = unsafe { deref(rc, "rc") }?.into();
        let lc = theory::lipschitz_constants(&rc)?;
        if let Some(s) = unsafe { l.as_mut() } {
            *s = lc.l;
        }
        if let Some(s) = unsafe { l_j.as_mut() } {
            *s = lc.l_j;
        }
        Ok(())
    })
}

/// Smoothness `L₂` of the deterministic objective.
///
/// # Safety
/// `rc` readable; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_smoothness(
    rc: *const WnpgRegularityConstants,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let rc: RegularityConstants = unsafe { deref(rc, "rc") }?.into();
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = theory::smoothness_l2(&rc)?;
        Ok(())
    })
}

/// Smoothness of `J_A` or `J_P` (the smaller of the available bounds).
///
/// # Safety
/// `rc` readable; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_objective_smoothness(
    rc: *const WnpgRegularityConstants,
    which: u32,
    sigma: f64,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let rc: RegularityConstants = unsafe { deref(rc, "rc") }?.into();
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = theory::objective_smoothness(&rc, exploration(which)?, sigma)?.value;
        Ok(())
    })
}

/// Variance bound `V_A` or `V_P` of the single-sample gradient estimator.
///
/// # Safety
/// `rc` readable; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_variance_bound(
    rc: *const WnpgRegularityConstants,
    which: u32,
    sigma: f64,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let rc: RegularityConstants = unsafe { deref(rc, "rc") }?.into();
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = theory::variance_bounds(&rc, exploration(which)?, sigma)?;
        Ok(())
    })
}

/// Deployment-gap bounds for Lipschitz constant `l`, dimension `d` and
/// noise scale `sigma`.
///
/// # Safety
/// Outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_deployment_gap(
    l: f64,
    d: usize,
    sigma: f64,
    uniform: *mut f64,
    suboptimality: *mut f64,
    tightness_floor: *mut f64,
) -> WnpgStatus {
    guard(|| {
        if !(l >= 0.0 && sigma >= 0.0) || d == 0 {
            return Err(fail(
                WnpgStatus::InvalidArgument,
                "need l >= 0, sigma >= 0 and d >= 1",
            ));
        }
        let g = theory::deployment_gap_bound(l, d, sigma);
        for (ptr, v) in [
            (uniform, g.uniform),
            (suboptimality, g.suboptimality),
            (tightness_floor, g.tightness_floor),
        ] {
            if let Some(s) = unsafe { ptr.as_mut() } {
                *s = v;
            }
        }
        Ok(())
    })
}

/// Noise scale for which the deployment gap costs exactly `epsilon / 2`.
///
/// # Safety
/// `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_sigma_adaptive(
    epsilon: f64,
    l: f64,
    d: usize,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let slot = unsafe { out(out_value, "out_value") }?;
        *slot = theory::sigma_adaptive(epsilon, l, d)?;
        Ok(())
    })
}

/// Sample complexity `N·K` under weak gradient domination `(alpha, beta)`.
///
/// # Safety
/// `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn wnpg_theory_sample_complexity(
    alpha: f64,
    beta: f64,
    l2: f64,
    v: f64,
    epsilon: f64,
    j_gap: f64,
    out_value: *mut f64,
) -> WnpgStatus {
    guard(|| {
        let slot = unsafe { out(out_value, "out_value") }?;
        let wgd = WgdParams::new(alpha, beta)?;
        *slot = theory::sample_complexity(&wgd, l2, v, epsilon, j_gap)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_round_trip() {
        let rc = RegularityConstants {
            horizon: Horizon::Finite(7),
            ..RegularityConstants::unit()
        };
        let c: WnpgRegularityConstants = (&rc).into();
        assert_eq!(c.horizon, 7);
        assert_eq!(RegularityConstants::from(&c), rc);
        let inf: WnpgRegularityConstants = (&RegularityConstants::unit()).into();
        assert_eq!(inf.horizon, 0);
        assert_eq!(RegularityConstants::from(&inf).horizon, Horizon::Infinite);
    }

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(
            Failure::from(Error::EmptyBatch).0,
            WnpgStatus::InvalidArgument
        );
        assert_eq!(
            Failure::from(Error::NonFiniteGradient { iteration: 3 }).0,
            WnpgStatus::Numerical
        );
        assert_eq!(
            Failure::from(Error::Config {
                path: "x".into(),
                message: "y".into()
            })
            .0,
            WnpgStatus::Config
        );
    }

    #[test]
    fn panics_become_status_codes() {
        assert_eq!(guard(|| panic!("boom")), WnpgStatus::Panic);
    }
}
