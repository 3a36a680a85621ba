/* C interface to the treefuse fusion classifier. */

#ifndef TREEFUSE_H
#define TREEFUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; nonzero mirrors the CLI exit codes where applicable.
 */
typedef enum TfStatus {
  Ok = 0,
  DataError = 2,
  ConfigError = 3,
  NullPointer = 4,
  InvalidUtf8 = 5,
  BufferTooSmall = 6,
} TfStatus;

/**
 * Opaque handle to a trained one-vs-all fusion model.
 */
typedef struct TfModel TfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the most recent error message (NUL-terminated) into `buf` and
 * returns the full message length in bytes excluding the terminator. A null
 * or too-small buffer leaves the message untouched; call with `len` 0 to
 * query the required size.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null.
 */
uintptr_t tf_last_error(char *buf, uintptr_t len);

/**
 * Trains a model from a features CSV (header row, one label column, numeric
 * feature columns split per `layout_csv`, e.g. "4,4,4"). `config_json` may
 * be null or "{}" for defaults; it accepts the serialized `TrainConfig`
 * schema. Returns null on failure (see `tf_last_error`).
 *
 * # Safety
 * `data_path`, `label_column` and `layout_csv` must be valid NUL-terminated
 * strings; `config_json` may be null.
 */
struct TfModel *tf_model_train_csv(const char *data_path,
                                   const char *label_column,
                                   const char *layout_csv,
                                   const char *config_json);

/**
 * Loads a model from its JSON file. Returns null on failure.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct TfModel *tf_model_load(const char *path);

/**
 * Saves the model as JSON.
 *
 * # Safety
 * `model` must come from this library and `path` must be a valid string.
 */
enum TfStatus tf_model_save(const struct TfModel *model, const char *path);

/**
 * Releases a model handle. Passing null is a no-op.
 *
 * # Safety
 * `model` must be a pointer previously returned by a constructor of this
 * library and must not be used afterwards.
 */
void tf_model_free(struct TfModel *model);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a valid handle or null.
 */
uintptr_t tf_model_num_classes(const struct TfModel *model);

/**
 * Total flat feature dimension (the sum of the per-set dimensions), or 0
 * for a null handle.
 *
 * # Safety
 * `model` must be a valid handle or null.
 */
uintptr_t tf_model_num_features(const struct TfModel *model);

/**
 * Copies class `k`'s NUL-terminated name into `buf`.
 *
 * # Safety
 * `model` must be a valid handle; `buf` must point to `len` writable bytes.
 */
enum TfStatus tf_model_class_name(const struct TfModel *model,
                                  uintptr_t k,
                                  char *buf,
                                  uintptr_t len);

/**
 * Writes one log-likelihood-ratio score per class into `out_scores`
 * (capacity `tf_model_num_classes`).
 *
 * # Safety
 * `model` must be a valid handle; `features` must point to `len` doubles;
 * `out_scores` must have room for one double per class.
 */
enum TfStatus tf_model_scores(const struct TfModel *model,
                              const double *features,
                              uintptr_t len,
                              double *out_scores);

/**
 * Argmax classification; ties go to the lowest class index.
 *
 * # Safety
 * Pointer requirements as in `tf_model_scores`; `out_class` and `out_score`
 * must be writable.
 */
enum TfStatus tf_model_classify(const struct TfModel *model,
                                const double *features,
                                uintptr_t len,
                                uintptr_t *out_class,
                                double *out_score);

/**
 * Sets `out` to true when every class score falls below `tau_out`.
 *
 * # Safety
 * Pointer requirements as in `tf_model_scores`; `out` must be writable.
 */
enum TfStatus tf_model_is_outlier(const struct TfModel *model,
                                  const double *features,
                                  uintptr_t len,
                                  double tau_out,
                                  bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEFUSE_H */
