/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BLINDMATCH_H
#define BLINDMATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  BM_STATUS_OK = 0,
  BM_STATUS_MISSING_FILE = 1,
  BM_STATUS_IO = 2,
  BM_STATUS_MANIFEST = 3,
  BM_STATUS_SHAPE_MISMATCH = 4,
  BM_STATUS_CHECKSUM = 5,
  BM_STATUS_NON_FINITE = 6,
  BM_STATUS_ZERO_ROW = 7,
  BM_STATUS_UNLABELED = 8,
  BM_STATUS_INVALID_LABELS = 9,
  BM_STATUS_OUT_OF_RANGE = 10,
  BM_STATUS_SINGULAR_KERNEL = 11,
  BM_STATUS_KIND_MISMATCH = 12,
  BM_STATUS_ASYMMETRIC = 13,
  BM_STATUS_TOO_LARGE = 14,
  BM_STATUS_CONFIG = 15,
  BM_STATUS_INVALID_PERMUTATION = 16,
  BM_STATUS_JSON = 17,
  BM_STATUS_NULL_POINTER = 64,
  BM_STATUS_PANIC = 65,
} BmStatus;

typedef enum {
  BM_LAP_BACKEND_JV = 0,
  BM_LAP_BACKEND_AUCTION = 1,
} BmLapBackend;

/**
 * Opaque QAP instance.
 */
typedef struct BmQap BmQap;

/**
 * Opaque solver report.
 */
typedef struct BmReport BmReport;

/**
 * Mirrors the solver configuration. `time_limit <= 0` means no limit.
 */
typedef struct {
  BmLapBackend lap;
  double tol_abs;
  double tol_rel;
  double tol_gap;
  double auction_eps0;
  double auction_decay;
  double auction_eps_floor;
  uint64_t max_iters;
  double time_limit;
  uint64_t primal_heuristic_seeds;
  bool use_lap_primals;
  uint64_t seed;
} BmHahnGrantConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *bm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bm_version(void);

/**
 * Builds a QAP `scale * sum C1_ik C2_{p(i) p(k)} + offset` from two
 * row-major `n x n` matrices. With `balanced`, the cost tensor is
 * stored in the square form that tightens dual bounds.
 *
 * # Safety
 * `c1` and `c2` must point to `n * n` doubles and `out` must be writable.
 */
BmStatus bm_qap_from_factors(const double *c1,
                             const double *c2,
                             size_t n,
                             double scale,
                             double offset,
                             bool balanced,
                             BmQap **out);

/**
 * # Safety
 * `qap` must come from `bm_qap_from_factors` and not be used afterwards.
 */
void bm_qap_free(BmQap *qap);

/**
 * Problem size, or 0 for a null handle.
 *
 * # Safety
 * `qap` must be null or a live handle.
 */
size_t bm_qap_size(const BmQap *qap);

/**
 * Objective of `perm` in the original units.
 *
 * # Safety
 * `perm` must point to `n` values and `out` must be writable.
 */
BmStatus bm_qap_objective(const BmQap *qap, const size_t *perm, size_t n, double *out);

/**
 * Default solver configuration.
 */
BmHahnGrantConfig bm_hahn_grant_config_default(void);

/**
 * Runs the factorized dual-ascent solver. `cfg` may be null for defaults.
 *
 * # Safety
 * `qap` must be a live handle, `cfg` null or readable, `out` writable.
 */
BmStatus bm_solve_hahn_grant(const BmQap *qap, const BmHahnGrantConfig *cfg, BmReport **out);

/**
 * Exact optimum by enumeration (small instances only).
 *
 * # Safety
 * `qap` must be a live handle and `out` writable.
 */
BmStatus bm_solve_enumeration(const BmQap *qap, BmReport **out);

/**
 * # Safety
 * `report` must come from a solve call and not be used afterwards.
 */
void bm_report_free(BmReport *report);

/**
 * Length of the permutation, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t bm_report_size(const BmReport *report);

/**
 * Copies the best permutation into `out`, which holds `len` entries.
 *
 * # Safety
 * `report` must be a live handle and `out` must hold `len` writable values.
 */
BmStatus bm_report_permutation(const BmReport *report, size_t *out, size_t len);

/**
 * Best objective found, in original units. NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double bm_report_primal_cost(const BmReport *report);

/**
 * Certified lower bound in original units. NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double bm_report_dual_bound(const BmReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
bool bm_report_converged(const BmReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
uint64_t bm_report_iterations(const BmReport *report);

/**
 * The report as a JSON string, or null on failure. Release it with
 * `bm_string_free`.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *bm_report_to_json(const BmReport *report);

/**
 * # Safety
 * `s` must be null or come from `bm_report_to_json`.
 */
void bm_string_free(char *s);

/**
 * Exact linear assignment on a row-major `n x n` cost matrix. Writes the
 * column of each row into `assignment` and the total cost into `objective`.
 *
 * # Safety
 * `cost` must hold `n * n` doubles, `assignment` `n` writable values and
 * `objective` must be writable.
 */
BmStatus bm_lap_jv(const double *cost, size_t n, size_t *assignment, double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLINDMATCH_H */
