#ifndef SEQNORM_H
#define SEQNORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeqnormStatus {
  SEQNORM_STATUS_OK = 0,
  SEQNORM_STATUS_NULL_POINTER = 1,
  SEQNORM_STATUS_DOMAIN = 2,
  SEQNORM_STATUS_UNSUPPORTED_REGION = 3,
  SEQNORM_STATUS_INSUFFICIENT_DATA = 4,
  SEQNORM_STATUS_DEGENERATE_SAMPLE = 5,
  SEQNORM_STATUS_EPSILON_TOO_SMALL = 6,
  SEQNORM_STATUS_CALIBRATION_FAILED = 7,
  SEQNORM_STATUS_STATE = 8,
  SEQNORM_STATUS_INTEGRITY = 9,
  SEQNORM_STATUS_SCHEMA = 10,
  SEQNORM_STATUS_PLAN = 11,
  SEQNORM_STATUS_IO = 12,
  SEQNORM_STATUS_INTERNAL = 13,
  SEQNORM_STATUS_PANIC = 14,
} SeqnormStatus;

typedef enum SeqnormState {
  SEQNORM_STATE_NEED_MORE = 0,
  SEQNORM_STATE_ACCEPTED = 1,
  SEQNORM_STATE_REJECTED = 2,
} SeqnormState;

typedef struct SeqnormPlan SeqnormPlan;

typedef struct SeqnormSession SeqnormSession;

typedef struct SeqnormSimResult {
  double accept_rate;
  double reject_rate;
  double mc_se;
  double asn;
} SeqnormSimResult;

/**
 * Session progress. `value` is the number of further samples required for
 * `NeedMore`, otherwise the 1-based stage of the decision.
 */
typedef struct SeqnormSessionStatus {
  enum SeqnormState state;
  uint64_t value;
} SeqnormSessionStatus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *seqnorm_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void seqnorm_string_free(char *s);

/**
 * Builds a known-variance plan with the given `zeta`. The plan is
 * verified and marked certified if it meets both error targets.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SeqnormStatus seqnorm_plan_known(double alpha,
                                      double beta,
                                      double epsilon,
                                      double gamma,
                                      double sigma,
                                      double zeta,
                                      double rho,
                                      uint32_t tau,
                                      struct SeqnormPlan **out);

/**
 * Unknown-variance counterpart of [`seqnorm_plan_known`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SeqnormStatus seqnorm_plan_unknown(double alpha,
                                        double beta,
                                        double epsilon,
                                        double gamma,
                                        double zeta,
                                        double rho,
                                        uint32_t tau,
                                        double tail_mass,
                                        size_t cell_budget,
                                        struct SeqnormPlan **out);

/**
 * Calibrates `zeta` and builds the plan. `sigma <= 0` selects the
 * unknown-variance kind. `zeta_out` may be NULL.
 *
 * # Safety
 * `out` must be valid for one handle; `zeta_out` NULL or valid for one
 * double.
 */
enum SeqnormStatus seqnorm_plan_calibrate(double alpha,
                                          double beta,
                                          double epsilon,
                                          double gamma,
                                          double sigma,
                                          double rho,
                                          uint32_t tau,
                                          double zeta_tol,
                                          double tail_mass,
                                          size_t cell_budget,
                                          struct SeqnormPlan **out,
                                          double *zeta_out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one handle.
 */
enum SeqnormStatus seqnorm_plan_from_json(const char *json, struct SeqnormPlan **out);

/**
 * Writes a newly allocated JSON string to `out`.
 *
 * # Safety
 * `plan` must be a live handle; `out` valid for one pointer.
 */
enum SeqnormStatus seqnorm_plan_to_json(const struct SeqnormPlan *plan, char **out);

/**
 * # Safety
 * `plan` must be NULL or a handle not yet freed.
 */
void seqnorm_plan_free(struct SeqnormPlan *plan);

/**
 * Number of stages, or 0 for NULL.
 *
 * # Safety
 * `plan` must be NULL or a live handle.
 */
size_t seqnorm_plan_stage_count(const struct SeqnormPlan *plan);

/**
 * 1 if certified, 0 if not or NULL.
 *
 * # Safety
 * `plan` must be NULL or a live handle.
 */
int32_t seqnorm_plan_certified(const struct SeqnormPlan *plan);

/**
 * Stage `index` (0-based): cumulative size and the two thresholds.
 *
 * # Safety
 * `plan` must be a live handle and the outputs valid for writing.
 */
enum SeqnormStatus seqnorm_plan_stage(const struct SeqnormPlan *plan,
                                      size_t index,
                                      uint64_t *n,
                                      double *a,
                                      double *b);

/**
 * Bounds on the acceptance probability at standardized offset `theta`.
 * The partition settings only affect unknown-variance plans.
 *
 * # Safety
 * `plan` must be a live handle and the outputs valid for writing.
 */
enum SeqnormStatus seqnorm_plan_oc_bounds(const struct SeqnormPlan *plan,
                                          double theta,
                                          double tail_mass,
                                          size_t cell_budget,
                                          double *lower,
                                          double *upper);

/**
 * Bound on the probability of sampling past 1-based non-final `stage`.
 *
 * # Safety
 * `plan` must be a live handle and `out` valid for writing.
 */
enum SeqnormStatus seqnorm_plan_sample_tail(const struct SeqnormPlan *plan,
                                            size_t stage,
                                            double theta,
                                            double *out);

/**
 * Monte Carlo run of the plan on `N(mu, sigma^2)` data.
 *
 * # Safety
 * `plan` must be a live handle and `out` valid for writing.
 */
enum SeqnormStatus seqnorm_simulate(const struct SeqnormPlan *plan,
                                    double mu,
                                    double sigma,
                                    uint64_t reps,
                                    uint64_t seed,
                                    struct SeqnormSimResult *out);

/**
 * Gaussian measure of the cone region `{h <= u <= k v + g}`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum SeqnormStatus seqnorm_cone_prob(double h, double g, double k, double *out);

/**
 * Starts a session on a copy of `plan`. Uncertified plans need
 * `allow_uncertified != 0`.
 *
 * # Safety
 * `plan` must be a live handle and `out` valid for one handle.
 */
enum SeqnormStatus seqnorm_session_new(const struct SeqnormPlan *plan,
                                       int32_t allow_uncertified,
                                       struct SeqnormSession **out);

/**
 * Appends `len` observations. On failure the session is unchanged.
 *
 * # Safety
 * `session` must be a live handle, `data` valid for `len` doubles (or
 * NULL with `len == 0`), and `status` NULL or valid for writing.
 */
enum SeqnormStatus seqnorm_session_feed(struct SeqnormSession *session,
                                        const double *data,
                                        size_t len,
                                        struct SeqnormSessionStatus *status);

/**
 * # Safety
 * `session` must be a live handle and `status` valid for writing.
 */
enum SeqnormStatus seqnorm_session_status(const struct SeqnormSession *session,
                                          struct SeqnormSessionStatus *status);

/**
 * Statistic of the most recently decided stage.
 *
 * # Safety
 * `session` must be a live handle and `out` valid for writing.
 */
enum SeqnormStatus seqnorm_session_last_statistic(const struct SeqnormSession *session,
                                                  double *out);

/**
 * # Safety
 * `session` must be a live handle; `out` valid for one pointer.
 */
enum SeqnormStatus seqnorm_session_to_json(const struct SeqnormSession *session, char **out);

/**
 * Parses a saved session and replays its history.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one handle.
 */
enum SeqnormStatus seqnorm_session_from_json(const char *json, struct SeqnormSession **out);

/**
 * # Safety
 * `session` must be NULL or a handle not yet freed.
 */
void seqnorm_session_free(struct SeqnormSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQNORM_H */
