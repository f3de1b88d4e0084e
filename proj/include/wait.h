/* C interface to the WAIT sequential-testing library.
 *
 * All objects are opaque handles created and destroyed through this API;
 * every fallible call returns a wait_status, with a thread-local message
 * available from wait_last_error() after a failure.  Strings returned
 * through char** are heap-allocated and must be released with
 * wait_string_free().
 */
#ifndef WAIT_H
#define WAIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WAIT_API __declspec(dllexport)
#else
#define WAIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wait_status {
    WAIT_OK = 0,
    WAIT_ERR_INVALID_ARGUMENT = 1,
    WAIT_ERR_OUT_OF_RANGE = 2,
    WAIT_ERR_WRONG_KIND = 3,
    WAIT_ERR_ASSERTION_FAILED = 4, /* an experiment ran but a validity/size assertion failed */
    WAIT_ERR_IO = 5,
    WAIT_ERR_INTERNAL = 6
} wait_status;

typedef struct wait_schedule wait_schedule;
typedef struct wait_profile wait_profile;

/* Message describing the most recent failure on this thread. */
WAIT_API const char *wait_last_error(void);

/* Level/weight schedules.  Keys: dyadic, power:<eps>, logcorr:<p>:<k0>,
 * itlog:<k0>, wdyadic, fwdyadic:<rho>. */
WAIT_API wait_status wait_schedule_create(const char *key, wait_schedule **out);

/* Explicit finite family: n strictly decreasing levels in (0,1) with
 * positive weights (NULL weights means all ones); the budget
 * sum w_k alpha_k must not exceed one. */
WAIT_API wait_status wait_schedule_create_custom(const double *alphas, const double *weights,
                                                 size_t n, wait_schedule **out);

WAIT_API void wait_schedule_free(wait_schedule *schedule);

/* alpha_k, b_k = log(1/alpha_k) and log w_k for one level. */
WAIT_API wait_status wait_schedule_level(const wait_schedule *schedule, int64_t k, double *alpha,
                                         double *b, double *log_weight);

/* sum of w_k alpha_k for k_start <= k <= k_max; never exceeds one. */
WAIT_API wait_status wait_schedule_partial_budget(const wait_schedule *schedule, int64_t k_max,
                                                  double *out);

WAIT_API wait_status wait_schedule_info(const wait_schedule *schedule, int64_t *k_start,
                                        double *target_rho, double *norm_constant);

/* Cumulative weight profile W(x) over [0, x_max]. */
WAIT_API wait_status wait_profile_build(const wait_schedule *schedule, double x_max,
                                        wait_profile **out);
WAIT_API void wait_profile_free(wait_profile *profile);

/* log W(x); -HUGE_VAL when no level has fired yet. */
WAIT_API wait_status wait_profile_log_weight_sum(const wait_profile *profile, double x,
                                                 double *out);
/* log W(x) / x; fails with WAIT_ERR_OUT_OF_RANGE when W(x) = 0. */
WAIT_API wait_status wait_profile_exponent(const wait_profile *profile, double x, double *out);
/* log W(x) - x; at most 0 for any valid schedule. */
WAIT_API wait_status wait_profile_envelope_slack(const wait_profile *profile, double x,
                                                 double *out);
/* N(x) = number of levels with b_k <= x; unit-weight schedules only. */
WAIT_API wait_status wait_profile_count(const wait_profile *profile, double x, int64_t *out);

/* Riemann zeta at s_exp > 1 by direct summation with an integral tail
 * bracket tightened below tol. */
WAIT_API wait_status wait_zeta_sum_with_tail(double s_exp, double tol, double *out);

/* Experiments 1..10.  config holds key=value lines (seed, scale, batch,
 * threads, eta, paths, horizon) and may be NULL.  Writes
 * <out_dir>/exp<N>.csv and <out_dir>/summary.json; the summary text is also
 * returned through summary_json when non-NULL. */
WAIT_API wait_status wait_experiment_run(int experiment_id, const char *config,
                                         const char *out_dir, char **summary_json);
WAIT_API wait_status wait_experiment_run_all(const char *config, const char *out_dir,
                                             char **summary_json);

/* The scheme table (definition, rho, target rho*I at I = 1/2). */
WAIT_API wait_status wait_schedule_table(char **text);

/* Running-maximum simulation to <out_dir>/simulate.csv (columns path,t,H).
 * config keys: paths, horizon, seed, batch, threads, mu,
 * hypothesis=null|alternative, grid_linear, grid_geometric. */
WAIT_API wait_status wait_simulate_run(const char *config, const char *out_dir,
                                       char **summary_json);

WAIT_API void wait_string_free(char *text);

#ifdef __cplusplus
}
#endif

#endif
