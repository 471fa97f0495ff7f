#ifndef WILDLAB_H
#define WILDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values mirror the CLI exit codes where one exists.
 */
typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_INVALID_ARGUMENT = 1,
  WL_STATUS_CONFIG = 2,
  WL_STATUS_NUMERICAL = 3,
  WL_STATUS_CERTIFICATION_FAILED = 4,
  WL_STATUS_IO = 5,
  WL_STATUS_PANIC = 6,
} WlStatus;

/**
 * Pipeline commands accepted by [`wl_run`].
 */
typedef enum WlCommand {
  WL_COMMAND_SOLVE = 0,
  WL_COMMAND_CERTIFY = 1,
  WL_COMMAND_WINDOW = 2,
  WL_COMMAND_BUDGET = 3,
  WL_COMMAND_REPORT = 4,
} WlCommand;

/**
 * Opaque experiment configuration.
 */
typedef struct WlConfig WlConfig;

/**
 * Opaque result of one pipeline command.
 */
typedef struct WlRun WlRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next wildlab call on the same thread.
 */
const char *wl_last_error(void);

/**
 * Loads and validates a TOML config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WlStatus wl_config_load(const char *path, struct WlConfig **out);

/**
 * Parses and validates a config given as TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WlStatus wl_config_parse(const char *text, struct WlConfig **out);

/**
 * Writes the hex config hash (64 characters plus NUL) into `buf`.
 *
 * # Safety
 * `cfg` must come from this library; `buf` must hold `len` bytes.
 */
enum WlStatus wl_config_hash(const struct WlConfig *cfg, char *buf, size_t len);

/**
 * Releases a config; null is ignored.
 *
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void wl_config_free(struct WlConfig *cfg);

/**
 * Runs one pipeline command in `<out_dir>/<hash prefix>`.
 *
 * A null `seed` keeps the seed stored in the config. On
 * [`WlStatus::Ok`], [`WlStatus::Numerical`] from a solver abort, and
 * [`WlStatus::CertificationFailed`], `*out` receives a run handle that
 * must be freed; on other failures it is set to null.
 *
 * # Safety
 * `cfg` must come from this library, `out_dir` must be a NUL-terminated
 * string, `seed` null or valid, and `out` a valid pointer.
 */
enum WlStatus wl_run(const struct WlConfig *cfg,
                     enum WlCommand command,
                     const char *out_dir,
                     const uint64_t *seed,
                     bool strict,
                     struct WlRun **out);

/**
 * Run directory path; valid while the handle lives.
 *
 * # Safety
 * `run` must come from [`wl_run`].
 */
const char *wl_run_dir(const struct WlRun *run);

/**
 * Newline-separated summary; valid while the handle lives.
 *
 * # Safety
 * `run` must come from [`wl_run`].
 */
const char *wl_run_summary(const struct WlRun *run);

/**
 * CLI-equivalent exit code of the run, or -1 for a null handle.
 *
 * # Safety
 * `run` must come from [`wl_run`].
 */
int wl_run_exit_code(const struct WlRun *run);

/**
 * Releases a run handle; null is ignored.
 *
 * # Safety
 * `run` must come from [`wl_run`] and not be used afterwards.
 */
void wl_run_free(struct WlRun *run);

/**
 * Largest eigenvalue of a symmetric matrix given by its packed upper
 * triangle (`a11 a12 a22` for dim 2, `a11 a12 a13 a22 a23 a33` for dim 3).
 *
 * # Safety
 * `packed` must point to 3 (dim 2) or 6 (dim 3) doubles.
 */
enum WlStatus wl_lambda_max(size_t dim, const double *packed, double *out);

/**
 * Pointwise relaxation slack `e - (d/2) λmax[w⊗w/ρ - F - H]` with
 * `e = |w|²/(2ρ)`; `f` and `h` are packed like in [`wl_lambda_max`].
 *
 * # Safety
 * `w` must hold `dim` doubles, `f` and `h` the packed triangle.
 */
enum WlStatus wl_relaxation_slack(size_t dim,
                                  const double *w,
                                  double rho,
                                  const double *f,
                                  const double *h,
                                  double *out);

/**
 * Energy level giving an `L²` budget of `target_eps` over a uniform
 * density `rho0` on the `dim`-torus.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WlStatus wl_choose_lambda0(size_t dim, double target_eps, double rho0, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WILDLAB_H */
