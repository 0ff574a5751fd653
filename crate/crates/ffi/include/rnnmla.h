#ifndef RNNMLA_H
#define RNNMLA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RnnmlaStatus {
  RNNMLA_STATUS_OK = 0,
  RNNMLA_STATUS_NULL_POINTER = 1,
  RNNMLA_STATUS_INVALID_ARGUMENT = 2,
  RNNMLA_STATUS_NUMERIC = 3,
  RNNMLA_STATUS_DATA = 4,
  RNNMLA_STATUS_FORMAT = 5,
  RNNMLA_STATUS_IO = 6,
  RNNMLA_STATUS_BUFFER_TOO_SMALL = 7,
  RNNMLA_STATUS_PANIC = 8,
} RnnmlaStatus;

/**
 * Labelled multi-channel dataset.
 */
typedef struct RnnmlaDataset RnnmlaDataset;

/**
 * Dense row-major matrix of doubles.
 */
typedef struct RnnmlaMatrix RnnmlaMatrix;

/**
 * Fitted classifier.
 */
typedef struct RnnmlaModel RnnmlaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *rnnmla_last_error_message(void);

/**
 * Cluster activation for a nucleus of `n` cells.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
enum RnnmlaStatus rnnmla_zeta(uint32_t n,
                              double p,
                              double r,
                              double lambda_plus,
                              double lambda_minus,
                              double x,
                              double *out);

/**
 * Copy a row-major `rows × cols` buffer into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum RnnmlaStatus rnnmla_matrix_new(const double *data,
                                    uintptr_t rows,
                                    uintptr_t cols,
                                    struct RnnmlaMatrix **out);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
uintptr_t rnnmla_matrix_rows(const struct RnnmlaMatrix *m);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
uintptr_t rnnmla_matrix_cols(const struct RnnmlaMatrix *m);

/**
 * Copy the entries row-major into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `m` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum RnnmlaStatus rnnmla_matrix_copy(const struct RnnmlaMatrix *m, double *buf, uintptr_t len);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void rnnmla_matrix_free(struct RnnmlaMatrix *m);

/**
 * Dataset from channel matrices (values in [0, 1]) and class ids
 * `0..classes`, one per row.
 *
 * # Safety
 * `channels` must point to `count` live matrix handles, `labels` to
 * `rows` ids; `out` must be writable.
 */
enum RnnmlaStatus rnnmla_dataset_new(const struct RnnmlaMatrix *const *channels,
                                     uintptr_t count,
                                     const uintptr_t *labels,
                                     uintptr_t rows,
                                     uintptr_t classes,
                                     struct RnnmlaDataset **out);

/**
 * Synthetic Gaussian blobs, already mapped to [0, 1].
 *
 * # Safety
 * `out` must be writable.
 */
enum RnnmlaStatus rnnmla_dataset_blobs(uintptr_t rows,
                                       uintptr_t channels,
                                       uintptr_t classes,
                                       uintptr_t dim,
                                       double separation,
                                       uint64_t seed,
                                       struct RnnmlaDataset **out);

/**
 * Load a manifest and return its preprocessed train and test splits.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `train` and `test` must be writable.
 */
enum RnnmlaStatus rnnmla_dataset_load_split(const char *path,
                                            struct RnnmlaDataset **train,
                                            struct RnnmlaDataset **test);

/**
 * # Safety
 * `d` must be null or a live dataset handle.
 */
uintptr_t rnnmla_dataset_rows(const struct RnnmlaDataset *d);

/**
 * # Safety
 * `d` must be null or a live dataset handle.
 */
uintptr_t rnnmla_dataset_channels(const struct RnnmlaDataset *d);

/**
 * # Safety
 * `d` must be null or a handle not yet freed.
 */
void rnnmla_dataset_free(struct RnnmlaDataset *d);

/**
 * Fit a model. `config_toml` is a run config in TOML (may be null for
 * defaults); `variant` (may be null) overrides its `variant` key.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `data` must be live;
 * `out` must be writable.
 */
enum RnnmlaStatus rnnmla_model_fit(const struct RnnmlaDataset *data,
                                   const char *config_toml,
                                   const char *variant,
                                   struct RnnmlaModel **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum RnnmlaStatus rnnmla_model_load(const char *path, struct RnnmlaModel **out);

/**
 * # Safety
 * `model` must be live; `path` must be NUL-terminated.
 */
enum RnnmlaStatus rnnmla_model_save(const struct RnnmlaModel *model, const char *path);

/**
 * Number of classes the model scores.
 *
 * # Safety
 * `model` must be null or live.
 */
uintptr_t rnnmla_model_classes(const struct RnnmlaModel *model);

/**
 * Class scores (`rows × classes`) for per-channel inputs.
 *
 * # Safety
 * `channels` must point to `count` live matrix handles; `out` must be writable.
 */
enum RnnmlaStatus rnnmla_model_scores(const struct RnnmlaModel *model,
                                      const struct RnnmlaMatrix *const *channels,
                                      uintptr_t count,
                                      struct RnnmlaMatrix **out);

/**
 * Predicted class id per row, written to `labels` (room for `len` ids).
 *
 * # Safety
 * `channels` must point to `count` live matrix handles; `labels` must
 * point to `len` writable ids.
 */
enum RnnmlaStatus rnnmla_model_predict(const struct RnnmlaModel *model,
                                       const struct RnnmlaMatrix *const *channels,
                                       uintptr_t count,
                                       uintptr_t *labels,
                                       uintptr_t len);

/**
 * Test accuracy in [0, 1] of `model` on a labelled dataset.
 *
 * # Safety
 * `model` and `data` must be live; `out` must be writable.
 */
enum RnnmlaStatus rnnmla_model_accuracy(const struct RnnmlaModel *model,
                                        const struct RnnmlaDataset *data,
                                        double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void rnnmla_model_free(struct RnnmlaModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RNNMLA_H */
