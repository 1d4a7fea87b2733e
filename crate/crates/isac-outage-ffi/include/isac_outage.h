#ifndef ISAC_OUTAGE_H
#define ISAC_OUTAGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of an FFI call.
 */
typedef enum IsacStatus {
  ISAC_STATUS_OK = 0,
  ISAC_STATUS_INVALID_CONFIG = 1,
  ISAC_STATUS_DEGENERATE_BEAMFORMER = 2,
  ISAC_STATUS_SINGULAR_FISHER = 3,
  ISAC_STATUS_NON_PSD_COVARIANCE = 4,
  ISAC_STATUS_ACCURACY_NOT_REACHED = 5,
  ISAC_STATUS_QUADRATURE_NOT_CONVERGED = 6,
  ISAC_STATUS_NULL_POINTER = 7,
} IsacStatus;

/**
 * Opaque handle holding a validated system configuration.
 */
typedef struct IsacSystem IsacSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a system handle from scalar parameters. Returns null and writes a
 * status on invalid input. The handle must be released with
 * [`isac_system_free`].
 */
struct IsacSystem *isac_system_new(uint32_t n,
                                   uint32_t m,
                                   double p_t,
                                   double sigma_u2,
                                   double sigma_r2,
                                   uint32_t l,
                                   double alpha_mag,
                                   double alpha_phase,
                                   double b1_mag,
                                   double b1_phase,
                                   double b2_mag,
                                   double b2_phase,
                                   enum IsacStatus *status);

/**
 * Release a handle created by [`isac_system_new`]. Null is a no-op.
 *
 * # Safety
 * `system` must be a pointer previously returned by [`isac_system_new`]
 * that has not been freed yet.
 */
void isac_system_free(struct IsacSystem *system);

/**
 * Analytic user outage probability `P(SINR < gamma)`.
 *
 * # Safety
 * `system` must be a live handle from [`isac_system_new`]; `out` must point
 * to writable memory for one double.
 */
enum IsacStatus isac_user_outage_analytic(const struct IsacSystem *system,
                                          double gamma,
                                          double *out);

/**
 * Analytic target outage probability `P(CRB > epsilon)` with
 * `theta_nodes` quadrature nodes per half-interval (pass 0 for the default).
 *
 * # Safety
 * As for [`isac_user_outage_analytic`].
 */
enum IsacStatus isac_target_outage_analytic(const struct IsacSystem *system,
                                            double epsilon,
                                            uintptr_t theta_nodes,
                                            double *out);

/**
 * Monte Carlo user outage probability over `trials` seeded realizations.
 * `std_error` may be null if the caller does not need it.
 *
 * # Safety
 * As for [`isac_user_outage_analytic`]; `std_error` is optional.
 */
enum IsacStatus isac_user_outage_montecarlo(const struct IsacSystem *system,
                                            double gamma,
                                            uint64_t trials,
                                            uint64_t seed,
                                            double *out,
                                            double *std_error);

/**
 * Monte Carlo target outage probability over `trials` seeded realizations.
 *
 * # Safety
 * As for [`isac_user_outage_montecarlo`].
 */
enum IsacStatus isac_target_outage_montecarlo(const struct IsacSystem *system,
                                              double epsilon,
                                              uint64_t trials,
                                              uint64_t seed,
                                              double *out,
                                              double *std_error);

/**
 * Monte Carlo ergodic rate `E[log2(1 + SINR)]` in bits per channel use.
 *
 * # Safety
 * As for [`isac_user_outage_montecarlo`].
 */
enum IsacStatus isac_ergodic_rate_montecarlo(const struct IsacSystem *system,
                                             uint64_t trials,
                                             uint64_t seed,
                                             double *out,
                                             double *std_error);

/**
 * Static description of a status code.
 */
const char *isac_status_message(enum IsacStatus status);

/**
 * Library version as a static C string.
 */
const char *isac_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISAC_OUTAGE_H */
