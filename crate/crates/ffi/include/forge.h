#ifndef FORGE_H
#define FORGE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ForgeStatus {
  FORGE_STATUS_OK = 0,
  FORGE_STATUS_NULL_POINTER = 1,
  FORGE_STATUS_INVALID_ARGUMENT = 2,
  FORGE_STATUS_IO = 3,
  FORGE_STATUS_INVALID_MATRIX = 4,
  FORGE_STATUS_ENSEMBLE = 5,
  FORGE_STATUS_MODEL = 6,
  FORGE_STATUS_FORMAT = 7,
  FORGE_STATUS_PREPROCESS = 8,
  FORGE_STATUS_PANIC = 99,
} ForgeStatus;

// `rows x 3` class-probability matrix.
typedef struct ForgeMatrix ForgeMatrix;

// Trained base learner.
typedef struct ForgeModel ForgeModel;

// Text normalization pipeline.
typedef struct ForgePreprocessor ForgePreprocessor;

// Scores from [`forge_evaluate`]. `confusion[t][p]` counts true class `t` predicted as `p`.
typedef struct ForgeMetrics {
  double accuracy;
  double macro_f1;
  double macro_precision;
  double macro_recall;
  double f1[3];
  uint64_t confusion[3][3];
} ForgeMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the same thread.
const char *forge_last_error(void);

// Library version, a static string.
const char *forge_version(void);

// # Safety
// `s` must come from this library (e.g. [`forge_preprocessor_normalize`]) and not be freed twice.
void forge_string_free(char *s);

// Pipeline with default settings and the bundled lexicon.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum ForgeStatus forge_preprocessor_new(struct ForgePreprocessor **out);

// Pipeline configured from a `key=value` file.
//
// # Safety
// `config_path` must be a NUL-terminated string; `out` a valid pointer.
enum ForgeStatus forge_preprocessor_from_config(const char *config_path,
                                                struct ForgePreprocessor **out);

// # Safety
// `pp` must be null or a handle from this library that has not been freed.
void forge_preprocessor_free(struct ForgePreprocessor *pp);

// Normalizes `text`. When the tweet is dropped `*dropped` is true and
// `*out_text` is null; otherwise `*out_text` receives a string to release
// with [`forge_string_free`].
//
// # Safety
// All pointers must be valid; `text` NUL-terminated.
enum ForgeStatus forge_preprocessor_normalize(const struct ForgePreprocessor *pp,
                                              const char *text,
                                              char **out_text,
                                              bool *dropped);

// Copies `rows * 3` row-major probabilities into a new matrix. Each row must
// lie in [0, 1] and sum to 1 within 1e-6.
//
// # Safety
// `producer` must be NUL-terminated; `data` must hold `rows * 3` doubles.
enum ForgeStatus forge_matrix_new(const char *producer,
                                  const double *data,
                                  uintptr_t rows,
                                  struct ForgeMatrix **out);

// Reads a prediction file. Row `i` of the matrix is the `i`-th line of the file.
//
// # Safety
// `path` must be NUL-terminated; `out` a valid pointer.
enum ForgeStatus forge_matrix_read(const char *path, struct ForgeMatrix **out);

// Writes `m` as a prediction file with one id per row.
//
// # Safety
// `ids` must point to `forge_matrix_rows(m)` NUL-terminated strings.
enum ForgeStatus forge_matrix_write(const struct ForgeMatrix *m,
                                    const char *const *ids,
                                    const char *path);

// Number of rows; 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
uintptr_t forge_matrix_rows(const struct ForgeMatrix *m);

// Copies row `row` into `out[0..3]`.
//
// # Safety
// `m` must be a live handle; `out` must hold 3 doubles.
enum ForgeStatus forge_matrix_row(const struct ForgeMatrix *m, uintptr_t row, double *out);

// # Safety
// `m` must be null or a handle from this library that has not been freed.
void forge_matrix_free(struct ForgeMatrix *m);

// Weighted soft vote. `weights` may be null for equal weights.
// Writes one label per row into `out_labels` (capacity `capacity`).
//
// # Safety
// `members` must point to `count` live handles; `weights`, when non-null, to `count` doubles.
enum ForgeStatus forge_soft_vote(const struct ForgeMatrix *const *members,
                                 uintptr_t count,
                                 const double *weights,
                                 uint8_t *out_labels,
                                 uintptr_t capacity);

// Maximum-value rule. See [`forge_soft_vote`] for the buffer contract.
//
// # Safety
// As for [`forge_soft_vote`].
enum ForgeStatus forge_max_value(const struct ForgeMatrix *const *members,
                                 uintptr_t count,
                                 uint8_t *out_labels,
                                 uintptr_t capacity);

// Majority vote; `count` must be odd.
//
// # Safety
// As for [`forge_soft_vote`].
enum ForgeStatus forge_hard_vote(const struct ForgeMatrix *const *members,
                                 uintptr_t count,
                                 uint8_t *out_labels,
                                 uintptr_t capacity);

// Loads a checkpoint written by `forge train`.
//
// # Safety
// `path` must be NUL-terminated; `out` a valid pointer.
enum ForgeStatus forge_model_load(const char *path, struct ForgeModel **out);

// Class probabilities for `count` normalized texts.
//
// # Safety
// `texts` must point to `count` NUL-terminated strings.
enum ForgeStatus forge_model_predict(const struct ForgeModel *model,
                                     const char *const *texts,
                                     uintptr_t count,
                                     struct ForgeMatrix **out);

// # Safety
// `model` must be null or a handle from this library that has not been freed.
void forge_model_free(struct ForgeModel *model);

// Accuracy, macro scores and the confusion matrix for `count` label pairs.
//
// # Safety
// `y_true` and `y_pred` must each hold `count` bytes; `out` must be valid.
enum ForgeStatus forge_evaluate(const uint8_t *y_true,
                                const uint8_t *y_pred,
                                uintptr_t count,
                                struct ForgeMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORGE_H */
