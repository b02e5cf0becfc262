#ifndef ESN_FFI_H
#define ESN_FFI_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes; `ESN_STATUS_OK` is zero.
 */
typedef enum EsnStatus {
  ESN_STATUS_OK = 0,
  ESN_STATUS_NULL_POINTER = 1,
  ESN_STATUS_INVALID_ARGUMENT = 2,
  ESN_STATUS_IO = 3,
  ESN_STATUS_PARSE = 4,
  ESN_STATUS_CONFIG = 5,
  ESN_STATUS_UNTRAINED = 6,
  ESN_STATUS_DIVERGED = 7,
  ESN_STATUS_NUMERIC = 8,
  ESN_STATUS_PANIC = 9,
} EsnStatus;

/**
 * Opaque model handle.
 */
typedef struct EsnModel EsnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *esn_last_error(void);

/**
 * Load a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum EsnStatus esn_model_load(const char *path, struct EsnModel **out);

/**
 * Save a model file.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum EsnStatus esn_model_save(const struct EsnModel *model, const char *path);

/**
 * Build and train a model on `series`. `config` is a `;`-separated list of
 * `key=value` pairs over the model configuration keys, e.g.
 * `"n_res=200;rho=1.25;washout_len=100;master_seed=7"`; NULL or empty
 * keeps the defaults.
 *
 * # Safety
 * `series` must hold `len` values; `out` must be writable.
 */
enum EsnStatus esn_model_train(const char *config,
                               const double *series,
                               size_t len,
                               struct EsnModel **out);

/**
 * Release a handle; NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void esn_model_free(struct EsnModel *model);

/**
 * Reservoir size, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
size_t esn_model_n_res(const struct EsnModel *model);

/**
 * 1 when the model has a readout, 0 otherwise (including NULL).
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
int32_t esn_model_is_trained(const struct EsnModel *model);

/**
 * Run `steps` free-running predictions into `out` (capacity `out_len`).
 *
 * # Safety
 * `out` must hold `out_len` values.
 */
enum EsnStatus esn_predict_generative(const struct EsnModel *model,
                                      size_t steps,
                                      double *out,
                                      size_t out_len);

/**
 * One-step-ahead predictions for `len` true inputs; `out[i]` predicts the
 * sample after `inputs[i]`.
 *
 * # Safety
 * `inputs` must hold `len` values and `out` `out_len` values.
 */
enum EsnStatus esn_predict_guided(const struct EsnModel *model,
                                  const double *inputs,
                                  size_t len,
                                  double *out,
                                  size_t out_len);

/**
 * `n` Mackey-Glass samples with delay `tau`, other parameters at their defaults.
 *
 * # Safety
 * `out` must hold `out_len` values.
 */
enum EsnStatus esn_mackey_glass(size_t n, double tau, double *out, size_t out_len);

/**
 * Mean squared error of two length-`len` arrays.
 *
 * # Safety
 * `a` and `b` must hold `len` values; `out` must be writable.
 */
enum EsnStatus esn_mse(const double *a, const double *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESN_FFI_H */
