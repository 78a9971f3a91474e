#ifndef GVAR_SPILL_H
#define GVAR_SPILL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GVS_OK 0

#define GVS_NULL_POINTER 1

#define GVS_INVALID_ARGUMENT 2

#define GVS_DIMENSION_MISMATCH 3

#define GVS_ISOLATED_UNIT 4

#define GVS_SINGULAR_DESIGN 5

#define GVS_SAMPLE_TOO_SHORT 6

#define GVS_SINGULAR_G 7

#define GVS_ILL_CONDITIONED 8

#define GVS_UNSTABLE 9

#define GVS_BOOTSTRAP_FAILED 10

#define GVS_OTHER 98

#define GVS_PANIC 99

// Estimated system together with its estimation sample.
typedef struct GvsModel GvsModel;

// Row-normalized cross-unit weight matrix.
typedef struct GvsWeights GvsWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gvs_version(void);

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *gvs_last_error(void);

// Builds weights by row-normalizing non-negative link strengths (`n x n`,
// diagonal ignored). `names` holds `n` two-letter codes or is NULL for
// default codes.
//
// # Safety
// `strengths` must point to `n * n` doubles, `names` (if not NULL) to `n`
// C strings, and `out` to writable storage for one pointer.
int32_t gvs_weights_from_strengths(size_t n,
                                   const double *strengths,
                                   const char *const *names,
                                   struct GvsWeights **out);

// Wraps an already row-normalized matrix with zero diagonal.
//
// # Safety
// As for [`gvs_weights_from_strengths`].
int32_t gvs_weights_from_matrix(size_t n,
                                const double *w,
                                const char *const *names,
                                struct GvsWeights **out);

// Releases weights; NULL is ignored.
//
// # Safety
// `w` must come from a `gvs_weights_*` constructor and not be used again.
void gvs_weights_free(struct GvsWeights *w);

// Estimates every unit equation with `lags` own and foreign lags on a
// `t x n` panel `y` with shocks `s`, then solves the reduced form.
//
// # Safety
// `weights` must be a live handle; `y` and `s` must point to `t * n`
// doubles; `out` to writable storage for one pointer.
int32_t gvs_model_estimate(const struct GvsWeights *weights,
                           size_t t,
                           size_t n,
                           const double *y,
                           const double *s,
                           size_t lags,
                           struct GvsModel **out);

// Releases a model; NULL is ignored.
//
// # Safety
// `m` must come from [`gvs_model_estimate`] and not be used again.
void gvs_model_free(struct GvsModel *m);

// Number of units, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t gvs_model_units(const struct GvsModel *m);

// Reduced-form lag order, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t gvs_model_lags(const struct GvsModel *m);

// Copies the `n x n` shock-impact matrix.
//
// # Safety
// `m` must be a live handle and `out` must hold `n * n` doubles.
int32_t gvs_model_lambda(const struct GvsModel *m, double *out);

// Copies reduced-form lag matrix `lag` (1-based).
//
// # Safety
// `m` must be a live handle and `out` must hold `n * n` doubles.
int32_t gvs_model_f(const struct GvsModel *m, size_t lag, double *out);

// Copies the estimated shock coefficient of every unit.
//
// # Safety
// `m` must be a live handle and `out` must hold `n` doubles.
int32_t gvs_model_theta(const struct GvsModel *m, double *out);

// Writes the companion-matrix spectral radius.
//
// # Safety
// `m` must be a live handle and `out` writable.
int32_t gvs_model_spectral_radius(const struct GvsModel *m, double *out);

// Responses to a one-period shock `scenario` (length `n`) for horizons
// `0..=horizon`, as `(horizon + 1) x n`; cumulated when `cumulated` is
// nonzero.
//
// # Safety
// `m` must be a live handle, `scenario` must hold `n` doubles and `out`
// `(horizon + 1) * n` doubles.
int32_t gvs_model_irf(const struct GvsModel *m,
                      const double *scenario,
                      size_t horizon,
                      int32_t cumulated,
                      double *out);

// Cumulated own-state responses of `unit` with and without feedback
// from other units, each of length `horizon + 1`.
//
// # Safety
// `m` must be a live handle; `out_gvar` and `out_muted` must each hold
// `horizon + 1` doubles.
int32_t gvs_model_second_round(const struct GvsModel *m,
                               size_t unit,
                               size_t horizon,
                               double *out_gvar,
                               double *out_muted);

// Residual bootstrap of the cumulated responses to `scenario`: bootstrap
// mean and the `p_lo`/`p_hi` percentiles, each `(horizon + 1) x n`.
// `discarded` receives the number of unstable replications dropped.
//
// # Safety
// `m` must be a live handle, `scenario` must hold `n` doubles, the three
// output arrays `(horizon + 1) * n` doubles each, and `discarded` must be
// writable or NULL.
int32_t gvs_model_bootstrap(const struct GvsModel *m,
                            const double *scenario,
                            size_t horizon,
                            size_t replications,
                            uint64_t seed,
                            double p_lo,
                            double p_hi,
                            double *out_mean,
                            double *out_lo,
                            double *out_hi,
                            size_t *discarded);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GVAR_SPILL_H */
