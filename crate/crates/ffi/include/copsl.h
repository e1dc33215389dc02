#ifndef COPSL_H
#define COPSL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CopslStatus {
  COPSL_STATUS_OK = 0,
  COPSL_STATUS_NULL_POINTER = 1,
  COPSL_STATUS_INVALID_ARGUMENT = 2,
  COPSL_STATUS_OUT_OF_BOUNDS = 3,
  COPSL_STATUS_BUDGET_EXHAUSTED = 4,
  COPSL_STATUS_IO = 5,
  COPSL_STATUS_CHECKPOINT = 6,
  COPSL_STATUS_CONFIG = 7,
  COPSL_STATUS_NUMERICAL = 8,
  COPSL_STATUS_NO_MODEL = 9,
  COPSL_STATUS_PANIC = 10,
} CopslStatus;

/**
 * Opaque optimization session.
 */
typedef struct CopslSession CopslSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *copsl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *copsl_version(void);

/**
 * Loads a session from a checkpoint file. Further progress is not written
 * back unless `copsl_session_save` is called.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CopslStatus copsl_session_open(const char *path, struct CopslSession **out);

/**
 * Starts a fresh session from a TOML config.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CopslStatus copsl_session_new(const char *config_toml, struct CopslSession **out);

/**
 * Releases a session. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void copsl_session_free(struct CopslSession *s);

/**
 * Decision dimension `n` and objective count `m`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CopslStatus copsl_session_dims(struct CopslSession *s, size_t *n, size_t *m);

/**
 * Evaluations used and remaining under the budget.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CopslStatus copsl_session_budget(struct CopslSession *s, size_t *used, size_t *remaining);

/**
 * Runs the next scheduled iteration. `finished` is set to 1 when nothing
 * was left to run.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CopslStatus copsl_session_step(struct CopslSession *s, int32_t *finished);

/**
 * Hypervolume of the archive after the last logged iteration.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CopslStatus copsl_session_hypervolume(struct CopslSession *s, double *out);

/**
 * Truly evaluates `x` (length n) into `y` (length m), consuming budget.
 *
 * # Safety
 * `x` must hold `n` values and `y` room for `m`.
 */
enum CopslStatus copsl_session_evaluate(struct CopslSession *s,
                                        const double *x,
                                        size_t n,
                                        double *y,
                                        size_t m);

/**
 * Maps a preference (length m, non-negative, not all zero) to its design
 * `x` (length n) through the trained model.
 *
 * # Safety
 * `pref` must hold `m` values and `x` room for `n`.
 */
enum CopslStatus copsl_session_solution(struct CopslSession *s,
                                        const double *pref,
                                        size_t m,
                                        double *x,
                                        size_t n);

/**
 * Writes the session checkpoint to `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum CopslStatus copsl_session_save(struct CopslSession *s, const char *path);

/**
 * Exact hypervolume of `count` points in `m` dimensions (row-major) with
 * respect to `reference`.
 *
 * # Safety
 * `points` must hold `count * m` values and `reference` `m`.
 */
enum CopslStatus copsl_hypervolume(const double *points,
                                   size_t count,
                                   size_t m,
                                   const double *reference,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPSL_H */
