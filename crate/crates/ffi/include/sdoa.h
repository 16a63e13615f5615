#ifndef SDOA_H
#define SDOA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SdoaStatus {
  SDOA_STATUS_OK = 0,
  SDOA_STATUS_NULL_POINTER = 1,
  SDOA_STATUS_INVALID_ARGUMENT = 2,
  SDOA_STATUS_DIMENSION = 3,
  SDOA_STATUS_NOT_CONVERGED = 4,
  SDOA_STATUS_NUMERICAL = 5,
  SDOA_STATUS_IO = 6,
  SDOA_STATUS_FORMAT = 7,
  SDOA_STATUS_BUFFER_TOO_SMALL = 8,
  SDOA_STATUS_PANIC = 9,
} SdoaStatus;

/**
 * Opaque trained or initialized network.
 */
typedef struct SdoaModel SdoaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *sdoa_version(void);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *sdoa_last_error(void);

/**
 * Number of points on the evaluation grid.
 */
size_t sdoa_eval_grid_len(void);

/**
 * Loads a model file. `*out` receives a handle owned by the caller.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SdoaStatus sdoa_model_load(const char *path_, struct SdoaModel **out);

/**
 * Fresh network with the default configuration for `n_antennas` antennas.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SdoaStatus sdoa_model_init(size_t n_antennas, uint64_t seed, struct SdoaModel **out);

/**
 * # Safety
 * `model` must come from this library; `path` must be nul-terminated.
 */
enum SdoaStatus sdoa_model_save(const struct SdoaModel *model, const char *path_);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void sdoa_model_free(struct SdoaModel *model);

/**
 * Antenna count the model expects, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t sdoa_model_n_antennas(const struct SdoaModel *model);

/**
 * Network estimate of `k` DOAs (ascending, degrees) from one snapshot.
 * `spectrum_out` may be null; otherwise it receives the spatial spectrum on
 * the evaluation grid.
 *
 * # Safety
 * `re`/`im` hold `n` values, `doas_out` holds `k`, `spectrum_out` holds
 * `spectrum_len` or is null.
 */
enum SdoaStatus sdoa_model_estimate(const struct SdoaModel *model,
                                    const double *re,
                                    const double *im,
                                    size_t n,
                                    size_t k,
                                    double *doas_out,
                                    double *spectrum_out,
                                    size_t spectrum_len);

/**
 * Classical estimate with `method` one of "fft", "music", "omp", "anm".
 *
 * # Safety
 * `method` is nul-terminated; `re`/`im` hold `n` values, `doas_out` holds `k`.
 */
enum SdoaStatus sdoa_estimate(const char *method,
                              const double *re,
                              const double *im,
                              size_t n,
                              size_t k,
                              double *doas_out);

/**
 * Synthesizes one snapshot from unit-amplitude sources on an `n`-antenna
 * array with all imperfections scaled by `xi`. An infinite `snr_db` gives a
 * noise-free snapshot.
 *
 * # Safety
 * `doas` holds `k` values; `re_out`/`im_out` hold `n`.
 */
enum SdoaStatus sdoa_simulate(const double *doas,
                              size_t k,
                              size_t n,
                              double snr_db,
                              double xi,
                              uint64_t seed,
                              double *re_out,
                              double *im_out);

/**
 * Gaussian reference spectrum (unit peaks, width `sigma_bar / n`) on the
 * evaluation grid.
 *
 * # Safety
 * `doas` holds `k` values; `out` holds `out_len`.
 */
enum SdoaStatus sdoa_reference_spectrum(const double *doas,
                                        size_t k,
                                        double sigma_bar,
                                        size_t n,
                                        double *out,
                                        size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDOA_H */
