#ifndef WNPG_H
#define WNPG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Exploration family for the theory calculators.
 */
#define WNPG_EXPLORATION_ACTION 0

#define WNPG_EXPLORATION_PARAMETER 1

/**
 * Result code of every fallible call.
 */
typedef enum WnpgStatus {
  WNPG_STATUS_OK = 0,
  WNPG_STATUS_NULL_POINTER = 1,
  WNPG_STATUS_INVALID_ARGUMENT = 2,
  WNPG_STATUS_CONFIG = 3,
  WNPG_STATUS_IO = 4,
  WNPG_STATUS_NUMERICAL = 5,
  WNPG_STATUS_BUFFER_TOO_SMALL = 6,
  WNPG_STATUS_PANIC = 7,
} WnpgStatus;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct WnpgConfig WnpgConfig;

/**
 * Deterministic policy `μ_θ` ready for deployment.
 */
typedef struct WnpgPolicy WnpgPolicy;

/**
 * Result of one training run.
 */
typedef struct WnpgRun WnpgRun;

/**
 * Regularity constants. `horizon = 0` means an infinite horizon.
 */
typedef struct WnpgRegularityConstants {
  double l_p;
  double l_r;
  double l_2p;
  double l_2r;
  double l_mu;
  double l_2mu;
  double r_max;
  double gamma;
  uint64_t horizon;
  double c;
  size_t d_theta;
  size_t d_action;
} WnpgRegularityConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wnpg_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes,
 * or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t wnpg_last_error(char *buf, size_t len);

/**
 * Parse a JSON experiment config.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_config` a writable handle slot.
 */
enum WnpgStatus wnpg_config_from_json(const char *json, struct WnpgConfig **out_config);

/**
 * Load a JSON experiment config from a file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_config` a writable handle slot.
 */
enum WnpgStatus wnpg_config_load(const char *path, struct WnpgConfig **out_config);

/**
 * Apply one `key=value` override, e.g. `sigma=0.05` or `noise.kind=gaussian`.
 * The config is left unchanged on failure.
 *
 * # Safety
 * `config` must be a live handle; `assignment` a NUL-terminated string.
 */
enum WnpgStatus wnpg_config_set(struct WnpgConfig *config, const char *assignment);

/**
 * Serialize the resolved config as pretty JSON into `buf`. `needed`
 * receives the byte length including the terminating NUL.
 *
 * # Safety
 * `config` must be a live handle; `buf` null or `len` writable bytes.
 */
enum WnpgStatus wnpg_config_to_json(const struct WnpgConfig *config,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

/**
 * Release a config. Null is ignored.
 *
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void wnpg_config_free(struct WnpgConfig *config);

/**
 * Train with `workers` threads (0 picks one per core). A diverged run is
 * still a successful call; query it with [`wnpg_run_diverged`].
 *
 * # Safety
 * `config` must be a live handle; `out_run` a writable handle slot.
 */
enum WnpgStatus wnpg_train(const struct WnpgConfig *config,
                           size_t workers,
                           struct WnpgRun **out_run);

/**
 * Number of logged iterations (always `K`).
 *
 * # Safety
 * `run` must be a live handle or null (returns 0).
 */
size_t wnpg_run_iterations(const struct WnpgRun *run);

/**
 * 1 if the run stopped early, 0 otherwise (or for null).
 *
 * # Safety
 * `run` must be a live handle or null.
 */
int32_t wnpg_run_diverged(const struct WnpgRun *run);

/**
 * Logged values at iteration `k` (1-based). Missing entries are NaN.
 *
 * # Safety
 * `run` must be a live handle; each output pointer null or writable.
 */
enum WnpgStatus wnpg_run_row(const struct WnpgRun *run,
                             size_t k,
                             double *j_hat,
                             double *j_det,
                             double *grad_norm);

/**
 * Final parameters. `needed` receives the parameter count even when the
 * buffer is too small.
 *
 * # Safety
 * `run` must be a live handle; `buf` null or `len` writable doubles.
 */
enum WnpgStatus wnpg_run_theta(const struct WnpgRun *run, double *buf, size_t len, size_t *needed);

/**
 * Write record.csv, theta_final.f64, config.json and curves.svg to `dir`.
 *
 * # Safety
 * Handles must be live; `dir` a NUL-terminated path.
 */
enum WnpgStatus wnpg_run_write(const struct WnpgRun *run,
                               const struct WnpgConfig *config,
                               const char *dir,
                               bool force);

/**
 * Deterministic policy from the run's final parameters.
 *
 * # Safety
 * `run` must be a live handle; `out_policy` a writable handle slot.
 */
enum WnpgStatus wnpg_run_policy(const struct WnpgRun *run, struct WnpgPolicy **out_policy);

/**
 * Release a run. Null is ignored.
 *
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void wnpg_run_free(struct WnpgRun *run);

/**
 * Policy with the architecture implied by `config` and parameters `theta`.
 *
 * # Safety
 * `config` must be a live handle; `theta` `len` readable doubles.
 */
enum WnpgStatus wnpg_policy_new(const struct WnpgConfig *config,
                                const double *theta,
                                size_t len,
                                struct WnpgPolicy **out_policy);

/**
 * Noiseless action `μ_θ(s)`.
 *
 * # Safety
 * `policy` must be a live handle; `state` `state_len` readable doubles;
 * `action` `action_len` writable doubles.
 */
enum WnpgStatus wnpg_policy_act(const struct WnpgPolicy *policy,
                                const double *state,
                                size_t state_len,
                                double *action,
                                size_t action_len);

/**
 * Mean and standard error of the deployed return over `episodes` episodes
 * of the environment in `config`.
 *
 * # Safety
 * Handles must be live; outputs null or writable.
 */
enum WnpgStatus wnpg_policy_deploy(const struct WnpgPolicy *policy,
                                   const struct WnpgConfig *config,
                                   size_t episodes,
                                   uint64_t seed,
                                   double *mean,
                                   double *std_error);

/**
 * Release a policy. Null is ignored.
 *
 * # Safety
 * `policy` must be null or a handle not yet freed.
 */
void wnpg_policy_free(struct WnpgPolicy *policy);

/**
 * Deterministic bandit objective `J_D(θ)`, with `dim = len`.
 *
 * # Safety
 * `theta` must point to `len` readable doubles; `out_value` writable.
 */
enum WnpgStatus wnpg_bandit_jd(double lipschitz,
                               size_t horizon,
                               double gamma,
                               const double *theta,
                               size_t len,
                               double *out_value);

/**
 * Bandit objective smoothed by uniform parameter noise of scale `sigma`.
 *
 * # Safety
 * As [`wnpg_bandit_jd`].
 */
enum WnpgStatus wnpg_bandit_jp(double lipschitz,
                               size_t horizon,
                               double gamma,
                               const double *theta,
                               size_t len,
                               double sigma,
                               double *out_value);

/**
 * All-ones constants with γ = 0.5, infinite horizon and unit dimensions.
 *
 * # Safety
 * `out_rc` must be writable.
 */
enum WnpgStatus wnpg_theory_unit_constants(struct WnpgRegularityConstants *out_rc);

/**
 * Lipschitz constants `L` and `L_J`.
 *
 * # Safety
 * `rc` readable; outputs null or writable.
 */
enum WnpgStatus wnpg_theory_lipschitz(const struct WnpgRegularityConstants *rc,
                                      double *l,
                                      double *l_j);

/**
 * Smoothness `L₂` of the deterministic objective.
 *
 * # Safety
 * `rc` readable; `out_value` writable.
 */
enum WnpgStatus wnpg_theory_smoothness(const struct WnpgRegularityConstants *rc, double *out_value);

/**
 * Smoothness of `J_A` or `J_P` (the smaller of the available bounds).
 *
 * # Safety
 * `rc` readable; `out_value` writable.
 */
enum WnpgStatus wnpg_theory_objective_smoothness(const struct WnpgRegularityConstants *rc,
                                                 uint32_t which,
                                                 double sigma,
                                                 double *out_value);

/**
 * Variance bound `V_A` or `V_P` of the single-sample gradient estimator.
 *
 * # Safety
 * `rc` readable; `out_value` writable.
 */
enum WnpgStatus wnpg_theory_variance_bound(const struct WnpgRegularityConstants *rc,
                                           uint32_t which,
                                           double sigma,
                                           double *out_value);

/**
 * Deployment-gap bounds for Lipschitz constant `l`, dimension `d` and
 * noise scale `sigma`.
 *
 * # Safety
 * Outputs null or writable.
 */
enum WnpgStatus wnpg_theory_deployment_gap(double l,
                                           size_t d,
                                           double sigma,
                                           double *uniform,
                                           double *suboptimality,
                                           double *tightness_floor);

/**
 * Noise scale for which the deployment gap costs exactly `epsilon / 2`.
 *
 * # Safety
 * `out_value` writable.
 */
enum WnpgStatus wnpg_theory_sigma_adaptive(double epsilon, double l, size_t d, double *out_value);

/**
 * Sample complexity `N·K` under weak gradient domination `(alpha, beta)`.
 *
 * # Safety
 * `out_value` writable.
 */
enum WnpgStatus wnpg_theory_sample_complexity(double alpha,
                                              double beta,
                                              double l2,
                                              double v,
                                              double epsilon,
                                              double j_gap,
                                              double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WNPG_H */
