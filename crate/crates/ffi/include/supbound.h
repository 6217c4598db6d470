#ifndef SUPBOUND_H
#define SUPBOUND_H

/* Generated by cbindgen from the supbound-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every C entry point.
 */
typedef enum SbStatus {
  /**
   * The call succeeded.
   */
  SB_STATUS_OK = 0,
  /**
   * Verification ran to completion and rejected the inputs.
   */
  SB_STATUS_VERIFICATION_FAILED = 1,
  /**
   * Invalid configuration, parameter, or state.
   */
  SB_STATUS_INVALID_INPUT = 2,
  /**
   * A string argument was not valid UTF-8 or contained an interior NUL.
   */
  SB_STATUS_BAD_STRING = 3,
  /**
   * An internal panic was caught at the boundary.
   */
  SB_STATUS_PANIC = 4,
} SbStatus;

/**
 * Opaque handle: a validated configuration with its derived constants.
 */
typedef struct SbEngine SbEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying crate as a static NUL-terminated string.
 * Never freed by the caller.
 */
const char *sb_version(void);

/**
 * Message describing the most recent failure on this thread, or NULL when
 * no failure happened yet. The string is owned by the library and valid
 * until the next failing call on the same thread; do not free it.
 */
const char *sb_last_error_message(void);

/**
 * Builds an engine from a configuration JSON document (the same schema the
 * CLI reads from a file). `base_dir` resolves any relative measure path in
 * the configuration; NULL means the current directory.
 *
 * On success writes an owned handle to `out_engine`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `base_dir` NULL or
 * NUL-terminated; `out_engine` a valid location to write one pointer.
 */
enum SbStatus sb_engine_new(const char *config_json,
                            const char *base_dir,
                            struct SbEngine **out_engine);

/**
 * Releases an engine. NULL is a no-op.
 *
 * # Safety
 * `engine` must be NULL or a pointer from [`sb_engine_new`] that has not
 * been freed yet.
 */
void sb_engine_free(struct SbEngine *engine);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or an owned string produced by one of the `_json`
 * entry points, freed at most once.
 */
void sb_string_free(char *s);

/**
 * Computes the tail-bound report and writes it as a JSON string to
 * `out_json`. `method` is "auto", "generic", "closed" or NULL for auto.
 *
 * # Safety
 * `engine` must be a live handle from [`sb_engine_new`]; `method` NULL or
 * NUL-terminated; `out_json` a valid location to write one pointer. The
 * result string must be released with [`sb_string_free`].
 */
enum SbStatus sb_engine_bound_json(const struct SbEngine *engine,
                                   const char *method,
                                   char **out_json);

/**
 * Samples the supremum ensemble and writes it as a JSON string to
 * `out_json`. A negative `seed` keeps the seed from the configuration.
 *
 * # Safety
 * `engine` must be a live handle from [`sb_engine_new`]; `out_json` a
 * valid location to write one pointer. The result string must be released
 * with [`sb_string_free`].
 */
enum SbStatus sb_engine_simulate_json(const struct SbEngine *engine, int64_t seed, char **out_json);

/**
 * Runs bound, simulation and both verification layers, writing the
 * verification summary as a JSON string to `out_json`. `cz_scale`
 * multiplies the scale constant inside the modulus check; 1.0 is the
 * honest setting and values below 1 are the negative control. Returns
 * `VerificationFailed` (with the summary still written) when any layer
 * rejects.
 *
 * # Safety
 * `engine` must be a live handle from [`sb_engine_new`]; `out_json` a
 * valid location to write one pointer. The result string must be released
 * with [`sb_string_free`].
 */
enum SbStatus sb_engine_verify_json(const struct SbEngine *engine,
                                    double cz_scale,
                                    char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPBOUND_H */
