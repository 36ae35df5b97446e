#ifndef IMPACTOPT_H
#define IMPACTOPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum ImpactStatus {
  IMPACT_STATUS_OK = 0,
  IMPACT_STATUS_NULL_POINTER = 1,
  IMPACT_STATUS_INVALID_ARGUMENT = 2,
  IMPACT_STATUS_CONFIG = 3,
  IMPACT_STATUS_SOLVER = 4,
  IMPACT_STATUS_IO = 5,
  IMPACT_STATUS_BUDGET = 6,
  IMPACT_STATUS_INTERNAL = 7,
  IMPACT_STATUS_PANIC = 8,
} ImpactStatus;

/**
 * Parsed and validated run configuration.
 */
typedef struct ImpactConfig ImpactConfig;

/**
 * Discretized problem with its density filter.
 */
typedef struct ImpactProblem ImpactProblem;

/**
 * Objective value of one trajectory.
 */
typedef struct ImpactObjective {
  double total;
  double disp;
  double plastic;
  double damage;
} ImpactObjective;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *impactopt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *impactopt_version(void);

/**
 * Loads and validates a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ImpactStatus impactopt_config_load(const char *path, struct ImpactConfig **out);

/**
 * Parses and validates a configuration from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ImpactStatus impactopt_config_parse(const char *text, struct ImpactConfig **out);

/**
 * # Safety
 * `cfg` must come from a config constructor and not be used afterwards.
 */
void impactopt_config_free(struct ImpactConfig *cfg);

/**
 * Builds the discretized problem of a configuration.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum ImpactStatus impactopt_problem_new(const struct ImpactConfig *cfg, struct ImpactProblem **out);

/**
 * # Safety
 * `p` must come from [`impactopt_problem_new`] and not be used afterwards.
 */
void impactopt_problem_free(struct ImpactProblem *p);

/**
 * Number of design elements, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t impactopt_problem_design_size(const struct ImpactProblem *p);

/**
 * Uniform initial design value of the configuration.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
double impactopt_problem_eta_init(const struct ImpactProblem *p);

/**
 * Runs the forward simulation for an element design (no filtering) and
 * reports the objective.
 *
 * # Safety
 * `eta` must point to `n` values and `out` must be valid.
 */
enum ImpactStatus impactopt_forward(const struct ImpactProblem *p,
                                    const double *eta,
                                    size_t n,
                                    struct ImpactObjective *out);

/**
 * Objective and adjoint gradient with respect to the raw (unfiltered)
 * design.
 *
 * # Safety
 * `eta_raw` and `gradient` must point to `n` values; `out` must be valid.
 */
enum ImpactStatus impactopt_evaluate(const struct ImpactProblem *p,
                                     const double *eta_raw,
                                     size_t n,
                                     struct ImpactObjective *out,
                                     double *gradient);

/**
 * Runs the optimization and writes the final filtered design. A
 * `max_iters` of 0 uses the configured cap. `iterations` may be null.
 *
 * # Safety
 * `eta_out` must point to `n` writable values.
 */
enum ImpactStatus impactopt_optimize(const struct ImpactConfig *cfg,
                                     size_t max_iters,
                                     double *eta_out,
                                     size_t n,
                                     size_t *iterations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPACTOPT_H */
