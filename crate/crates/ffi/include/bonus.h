#ifndef BONUS_H
#define BONUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BonusStatus {
  BONUS_STATUS_OK = 0,
  BONUS_STATUS_NULL_POINTER = 1,
  BONUS_STATUS_INVALID_ARGUMENT = 2,
  BONUS_STATUS_DIMENSION_MISMATCH = 3,
  BONUS_STATUS_NUMERICAL = 4,
  BONUS_STATUS_LEARNER_FAILED = 5,
  BONUS_STATUS_PANIC = 6,
} BonusStatus;

typedef enum BonusLearnerKind {
  // `‖x‖²`.
  BONUS_LEARNER_KIND_AGNOSTIC = 0,
  // Rank-k PCA by eigendecomposition.
  BONUS_LEARNER_KIND_PCA = 1,
  // Rank-k PCA by EM.
  BONUS_LEARNER_KIND_EM_PCA = 2,
  // Rank-k two-group maximum likelihood.
  BONUS_LEARNER_KIND_TWO_GROUP = 3,
} BonusLearnerKind;

typedef enum BonusEstimator {
  BONUS_ESTIMATOR_BH = 0,
  BONUS_ESTIMATOR_STOREY = 1,
} BonusEstimator;

// Row-major real observations under a standard Gaussian null.
typedef struct BonusDataset BonusDataset;

typedef struct BonusResult BonusResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *bonus_last_error(void);

// Copies `rows × dim` row-major values into a new dataset.
//
// # Safety
// `data` must point to `rows * dim` readable doubles and `out` must be
// writable.
enum BonusStatus bonus_dataset_new(const double *data,
                                   size_t rows,
                                   size_t dim,
                                   struct BonusDataset **out);

// # Safety
// `dataset` must come from [`bonus_dataset_new`] and not be freed twice.
void bonus_dataset_free(struct BonusDataset *dataset);

double bonus_fdp_bh(size_t n, size_t n_tilde, size_t real_in_region, size_t synthetic_in_region);

// `+∞` when `synthetic_in_correction` is zero.
double bonus_fdp_storey(size_t real_in_correction,
                        size_t synthetic_in_correction,
                        size_t real_in_region,
                        size_t synthetic_in_region);

// Benjamini–Hochberg. Writes 1 into `mask[i]` for rejected hypotheses and 0
// elsewhere; `count` may be null.
//
// # Safety
// `pvalues` must hold `n` doubles and `mask` must hold `n` writable bytes.
enum BonusStatus bonus_bh(const double *pvalues,
                          size_t n,
                          double alpha,
                          uint8_t *mask,
                          size_t *count);

// Storey-BH with null-proportion threshold `lambda`.
//
// # Safety
// As for [`bonus_bh`].
enum BonusStatus bonus_storey_bh(const double *pvalues,
                                 size_t n,
                                 double alpha,
                                 double lambda,
                                 uint8_t *mask,
                                 size_t *count);

// Runs BONuS on `dataset` against a standard Gaussian null with `n_tilde`
// synthetic draws. `k` is the rank for the low-rank learners and ignored
// by the agnostic one. Identical arguments give identical results.
//
// # Safety
// `dataset` must be a live handle and `out` must be writable.
enum BonusStatus bonus_run(const struct BonusDataset *dataset,
                           enum BonusLearnerKind learner,
                           size_t k,
                           enum BonusEstimator estimator,
                           double alpha,
                           size_t n_tilde,
                           uint64_t seed,
                           struct BonusResult **out);

// # Safety
// `result` must be a live handle or null.
size_t bonus_result_rejected_count(const struct BonusResult *result);

// Stopping step of the peeling loop (first step is 1); 0 for null.
//
// # Safety
// `result` must be a live handle or null.
size_t bonus_result_stopping_step(const struct BonusResult *result);

// Copies up to `capacity` rejected row indices (ascending) into `out` and
// stores the number copied in `written`.
//
// # Safety
// `out` must hold `capacity` writable values; `written` may be null.
enum BonusStatus bonus_result_rejected(const struct BonusResult *result,
                                       size_t *out,
                                       size_t capacity,
                                       size_t *written);

// # Safety
// `result` must come from [`bonus_run`] and not be freed twice.
void bonus_result_free(struct BonusResult *result);

// Exhaustive hypergeometric check for `a ≤ a_max`, `b ≤ b_max`. Stores the
// number of violated cases in `violations`.
//
// # Safety
// `violations` must be writable.
enum BonusStatus bonus_lemma_check(uint64_t a_max, uint64_t b_max, size_t *violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BONUS_H */
