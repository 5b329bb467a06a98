#ifndef VISCOSPLASH_H
#define VISCOSPLASH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_INVALID_UTF8 = 2,
  VS_STATUS_CONFIG = 3,
  VS_STATUS_PARAM = 4,
  VS_STATUS_GEOMETRY = 5,
  VS_STATUS_SOLVER = 6,
  VS_STATUS_NO_CONTRACTION = 7,
  VS_STATUS_MESH_FOLD = 8,
  VS_STATUS_HORIZON_EXCEEDED = 9,
  VS_STATUS_PRECONDITION = 10,
  VS_STATUS_IO = 11,
  VS_STATUS_OUT_OF_RANGE = 12,
  VS_STATUS_BUFFER_TOO_SMALL = 13,
  VS_STATUS_PANIC = 14,
  VS_STATUS_OTHER = 15,
} VsStatus;

typedef enum VsField {
  /**
   * Two values per node.
   */
  VS_FIELD_VELOCITY = 0,
  /**
   * One value per node.
   */
  VS_FIELD_PRESSURE = 1,
  /**
   * `T11, T12, T22` per node.
   */
  VS_FIELD_STRESS = 2,
  /**
   * Two values per node, conformal coordinates.
   */
  VS_FIELD_FLUX = 3,
  /**
   * Two values per node, reference coordinates.
   */
  VS_FIELD_NODES = 4,
} VsField;

/**
 * Converged run: snapshots on the reference grid and the contraction report.
 */
typedef struct VsRun VsRun;

/**
 * Parsed scenario.
 */
typedef struct VsScenario VsScenario;

/**
 * Solver settings. Obtain defaults from [`vs_config_default`].
 */
typedef struct VsConfig {
  double tol_picard;
  uint32_t max_sweeps;
  double beta;
  double c_cal;
  double mu_cal;
  bool allow_beyond_horizon;
  bool newtonian;
} VsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *vs_version(void);

/**
 * Copies the last error message of this thread into `buf` (nul-terminated,
 * truncated to `len`). Returns the full message length without the nul, or 0
 * when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vs_last_error(char *buf, size_t len);

struct VsConfig vs_config_default(void);

/**
 * `(c_cal We/(1+We))^(1/mu_cal)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum VsStatus vs_max_horizon(double weissenberg, double c_cal, double mu_cal, double *out);

/**
 * Parses a scenario document.
 *
 * # Safety
 * `json` must be null or a nul-terminated string; `out` must be null or
 * valid for writes.
 */
enum VsStatus vs_scenario_from_json(const char *json, struct VsScenario **out);

/**
 * Reads a scenario file.
 *
 * # Safety
 * As [`vs_scenario_from_json`], with `path` a file path.
 */
enum VsStatus vs_scenario_load(const char *path, struct VsScenario **out);

/**
 * Serializes a scenario. The string must be released with
 * [`vs_string_free`].
 *
 * # Safety
 * `sc` must be null or a live handle; `out` must be null or valid for writes.
 */
enum VsStatus vs_scenario_to_json(const struct VsScenario *sc, char **out);

/**
 * # Safety
 * `sc` must be null or a handle from this library, released once.
 */
void vs_scenario_free(struct VsScenario *sc);

/**
 * # Safety
 * `s` must be null or a string returned by this library, released once.
 */
void vs_string_free(char *s);

/**
 * Runs the scenario over `[0, t_final]` to Picard convergence. `cfg` may be
 * null for defaults.
 *
 * # Safety
 * `sc` must be a live handle, `cfg` null or valid, `out` valid for writes.
 */
enum VsStatus vs_run_simulate(const struct VsScenario *sc,
                              const struct VsConfig *cfg,
                              uint64_t seed,
                              struct VsRun **out);

/**
 * # Safety
 * `run` must be null or a handle from this library, released once.
 */
void vs_run_free(struct VsRun *run);

/**
 * Number of snapshots and of grid nodes.
 *
 * # Safety
 * `run` must be a live handle; the outputs null or valid for writes.
 */
enum VsStatus vs_run_shape(const struct VsRun *run, size_t *snapshots, size_t *nodes);

/**
 * Sweeps used and the largest per-sweep contraction ratio (NaN when fewer
 * than two sweeps ran).
 *
 * # Safety
 * As [`vs_run_shape`].
 */
enum VsStatus vs_run_contraction(const struct VsRun *run, size_t *sweeps, double *max_ratio);

/**
 * Copies one field of snapshot `k` into `buf`, node by node. Fails with
 * `BufferTooSmall` when `len` is below nodes times the field width.
 *
 * # Safety
 * `run` must be a live handle, `time` null or valid, `buf` valid for `len`
 * writes.
 */
enum VsStatus vs_run_snapshot(const struct VsRun *run,
                              size_t k,
                              enum VsField field,
                              double *time,
                              double *buf,
                              size_t len);

/**
 * Writes snapshot CSVs and `manifest.json` into `dir`.
 *
 * # Safety
 * `run` must be a live handle and `dir` a nul-terminated path.
 */
enum VsStatus vs_run_write(const struct VsRun *run, const char *dir);

/**
 * Splash times and sup-time flux gaps of the family `eps[i] b`. Entries
 * without a splash before `t_final` get NaN in `t_star`.
 *
 * # Safety
 * `sc` must be a live handle, `cfg` null or valid, `eps`, `t_star` and `gap`
 * valid for `n` elements.
 */
enum VsStatus vs_splash_family(const struct VsScenario *sc,
                               const struct VsConfig *cfg,
                               const double *eps,
                               size_t n,
                               double bx,
                               double by,
                               double *t_star,
                               double *gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VISCOSPLASH_H */
