#ifndef GIVENS_SWEEP_H
#define GIVENS_SWEEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GS_SCORE_RSS 0

#define GS_SCORE_LOGLIK 1

#define GS_SCORE_BIC 2

#define GS_METHOD_QR 0

#define GS_METHOD_CHOLESKY 1

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_INVALID_DATASET = 3,
  GS_STATUS_LIMIT_EXCEEDED = 4,
  GS_STATUS_NUMERICAL = 5,
  GS_STATUS_NOT_FOUND = 6,
  GS_STATUS_BUFFER_TOO_SMALL = 7,
  GS_STATUS_PANIC = 8,
} GsStatus;

// Opaque dataset handle.
typedef struct GsDataset GsDataset;

// Opaque score table handle.
typedef struct GsScoreTable GsScoreTable;

typedef struct GsSweepOptions {
  // One of the `GS_SCORE_*` constants.
  uint32_t score;
  // One of the `GS_METHOD_*` constants.
  uint32_t method;
  bool include_empty;
  bool center;
  bool scale;
  // Power of two; 1 runs sequentially.
  size_t workers;
} GsSweepOptions;

typedef struct GsFamily {
  // 0-based variable id.
  size_t response;
  // Bit `v` set when variable `v` is a parent.
  uint64_t parents;
  size_t nparents;
  double rss;
  double score;
  bool perfect_fit;
} GsFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *gs_last_error(void);

// Copies `n * m` column-major values into a new dataset with names X1..Xm.
//
// # Safety
// `values` must point to `n * m` readable doubles and `out` must be writable.
enum GsStatus gs_dataset_new(const double *values, size_t n, size_t m, struct GsDataset **out);

// # Safety
// `dataset` must come from [`gs_dataset_new`] and not be freed twice.
void gs_dataset_free(struct GsDataset *dataset);

// Writes the greedy schedule for `m` variables (1-based positions) into
// `out`. `*len` receives the schedule length; pass `out = NULL` to query it.
//
// # Safety
// `len` must be writable; `out`, when non-null, must hold `cap` entries.
enum GsStatus gs_greedy_swaps(size_t m, uint32_t *out, size_t cap, size_t *len);

// Rotation flops of a full sequential sweep over `m` variables.
uint64_t gs_predicted_rotation_flops(size_t m);

struct GsSweepOptions gs_sweep_options_default(void);

// Scores every family of `dataset`. `options` may be NULL for defaults.
//
// # Safety
// `dataset` must be a live handle, `options` null or readable, `out` writable.
enum GsStatus gs_sweep(const struct GsDataset *dataset,
                       const struct GsSweepOptions *options,
                       struct GsScoreTable **out);

// # Safety
// `table` must come from [`gs_sweep`] and not be freed twice.
void gs_table_free(struct GsScoreTable *table);

// # Safety
// `table` must be null or a live handle.
size_t gs_table_len(const struct GsScoreTable *table);

// # Safety
// `table` must be null or a live handle.
uint64_t gs_table_rotation_flops(const struct GsScoreTable *table);

// Entry `index` in (response, parent mask) order. Coefficients, one per
// parent in ascending id, go to `coefficients` when it is non-null.
//
// # Safety
// `table` must be live, `out` writable, `coefficients` null or `cap` long.
enum GsStatus gs_table_get(const struct GsScoreTable *table,
                           size_t index,
                           struct GsFamily *out,
                           double *coefficients,
                           size_t cap);

// Looks up one family by response id and parent bit mask.
//
// # Safety
// As for [`gs_table_get`].
enum GsStatus gs_table_find(const struct GsScoreTable *table,
                            size_t response,
                            uint64_t parents,
                            struct GsFamily *out,
                            double *coefficients,
                            size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIVENS_SWEEP_H */
