#ifndef HETNET_ENERGY_H
#define HETNET_ENERGY_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HnMethod {
  HN_METHOD_MILP = 0,
  HN_METHOD_MAX_POWER_SWITCHING = 1,
  HN_METHOD_POWER_SCALING = 2,
  HN_METHOD_FULL_POWER = 3,
} HnMethod;

typedef enum HnOutcome {
  HN_OUTCOME_FEASIBLE = 0,
  HN_OUTCOME_INFEASIBLE = 1,
  /**
   * Solver limit hit without a solution, or the model was only exported.
   */
  HN_OUTCOME_UNSOLVED = 2,
} HnOutcome;

typedef enum HnPreset {
  HN_PRESET_DESK = 0,
  HN_PRESET_PAPER = 1,
} HnPreset;

/**
 * Result code of every fallible call.
 */
typedef enum HnStatus {
  HN_STATUS_OK = 0,
  HN_STATUS_NULL_POINTER = 1,
  HN_STATUS_INVALID_ARGUMENT = 2,
  HN_STATUS_CONFIG = 3,
  HN_STATUS_SOLVER = 4,
  HN_STATUS_IO = 5,
  /**
   * A handle holds no solution or an index is out of range.
   */
  HN_STATUS_NO_VALUE = 6,
  HN_STATUS_PANIC = 7,
} HnStatus;

/**
 * Experiment configuration.
 */
typedef struct HnConfig HnConfig;

/**
 * One generated network instance.
 */
typedef struct HnInstance HnInstance;

/**
 * Piecewise-linear upper bound of the inverse rate.
 */
typedef struct HnPwl HnPwl;

/**
 * Outcome of one method on one instance.
 */
typedef struct HnSolution HnSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *hn_version(void);

/**
 * Message of the last failing call on this thread; empty if none. Valid
 * until the next failing call on this thread.
 */
const char *hn_last_error_message(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum HnStatus hn_config_preset(enum HnPreset preset, struct HnConfig **out_config);

/**
 * Parse a TOML experiment configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out_config` a valid pointer.
 */
enum HnStatus hn_config_from_toml(const char *toml, struct HnConfig **out_config);

/**
 * # Safety
 * `config` must come from a `hn_config_*` constructor or be null.
 */
void hn_config_free(struct HnConfig *config);

/**
 * Instance `run` of the configured layout with equal demand per DP (bit/s).
 *
 * # Safety
 * `config` must be a live handle and `out_instance` a valid pointer.
 */
enum HnStatus hn_scenario_generate(const struct HnConfig *config,
                                   uint64_t seed,
                                   uint64_t run,
                                   double demand,
                                   struct HnInstance **out_instance);

/**
 * # Safety
 * `instance` must come from [`hn_scenario_generate`] or be null.
 */
void hn_instance_free(struct HnInstance *instance);

/**
 * Number of cells; 0 for a null handle.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
size_t hn_instance_num_cells(const struct HnInstance *instance);

/**
 * Number of demand points; 0 for a null handle.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
size_t hn_instance_num_dps(const struct HnInstance *instance);

/**
 * Solve the inner-approximation MILP with the bundled branch and bound.
 * Models above the configured export threshold yield `HN_OUTCOME_UNSOLVED`.
 *
 * # Safety
 * `config` and `instance` must be live handles and `out_solution` a valid pointer.
 */
enum HnStatus hn_solve_milp(const struct HnConfig *config,
                            const struct HnInstance *instance,
                            struct HnSolution **out_solution);

/**
 * Run a reference method; `HN_METHOD_MILP` is accepted too.
 *
 * # Safety
 * As for [`hn_solve_milp`].
 */
enum HnStatus hn_solve_baseline(const struct HnConfig *config,
                                const struct HnInstance *instance,
                                enum HnMethod method,
                                struct HnSolution **out_solution);

/**
 * # Safety
 * `solution` must come from a solve call or be null.
 */
void hn_solution_free(struct HnSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle and `out_outcome` a valid pointer.
 */
enum HnStatus hn_solution_outcome(const struct HnSolution *solution, enum HnOutcome *out_outcome);

/**
 * Exact energy of the returned configuration, W·T0.
 *
 * # Safety
 * `solution` must be a live handle and `out_energy` a valid pointer.
 */
enum HnStatus hn_solution_energy(const struct HnSolution *solution, double *out_energy);

/**
 * MILP objective value; only MILP solutions carry one.
 *
 * # Safety
 * `solution` must be a live handle and `out_objective` a valid pointer.
 */
enum HnStatus hn_solution_objective(const struct HnSolution *solution, double *out_objective);

/**
 * Activity and transmit power (W) of cell `cell`.
 *
 * # Safety
 * `solution` must be a live handle; `out_active` and `out_power` valid pointers.
 */
enum HnStatus hn_solution_cell(const struct HnSolution *solution,
                               size_t cell,
                               bool *out_active,
                               double *out_power);

/**
 * Serving cell (0-based) of demand point `dp`.
 *
 * # Safety
 * `solution` must be a live handle and `out_cell` a valid pointer.
 */
enum HnStatus hn_solution_serving(const struct HnSolution *solution, size_t dp, size_t *out_cell);

/**
 * Bound of the inverse rate on `[gamma_min, gamma_max]` (linear SINR) with
 * maximum error `epsilon`.
 *
 * # Safety
 * `out_pwl` must be a valid pointer.
 */
enum HnStatus hn_pwl_build(double gamma_min,
                           double gamma_max,
                           double epsilon,
                           struct HnPwl **out_pwl);

/**
 * Bound value at `gamma`; NaN for a null handle.
 *
 * # Safety
 * `pwl` must be a live handle or null.
 */
double hn_pwl_eval(const struct HnPwl *pwl, double gamma);

/**
 * Number of linear pieces; 0 for a null handle.
 *
 * # Safety
 * `pwl` must be a live handle or null.
 */
size_t hn_pwl_pieces(const struct HnPwl *pwl);

/**
 * # Safety
 * `pwl` must come from [`hn_pwl_build`] or be null.
 */
void hn_pwl_free(struct HnPwl *pwl);

/**
 * Write the instance's MILP in fixed MPS format to `path`. Shortened names
 * are listed in `path` with the extension replaced by `.names`.
 *
 * # Safety
 * `config` and `instance` must be live handles and `path` a NUL-terminated string.
 */
enum HnStatus hn_export_mps(const struct HnConfig *config,
                            const struct HnInstance *instance,
                            const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETNET_ENERGY_H */
