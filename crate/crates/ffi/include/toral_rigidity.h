#ifndef TORAL_RIGIDITY_H
#define TORAL_RIGIDITY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ToralStatus {
  ToralStatus_Ok = 0,
  ToralStatus_NullPointer = 1,
  ToralStatus_InvalidUtf8 = 2,
  ToralStatus_Parse = 3,
  ToralStatus_Precondition = 4,
  ToralStatus_Domain = 5,
  ToralStatus_Dimension = 6,
  ToralStatus_Unsupported = 7,
  ToralStatus_Internal = 8,
  ToralStatus_Panic = 9,
} ToralStatus;

/**
 * Opaque handle to a block-family presentation.
 */
typedef struct ToralPresentation ToralPresentation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated name of a status code.
 */
const char *toral_status_name(enum ToralStatus status);

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into the library from the same thread.
 */
const char *toral_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be freed twice.
 */
void toral_string_free(char *s);

/**
 * Parses a presentation document `{"k", "n", "lambda", "family"}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ToralStatus toral_presentation_from_json(const char *json, struct ToralPresentation **out);

/**
 * Builds the block family from `k`, `n` and a JSON list of `Λ` generators.
 *
 * # Safety
 * `lambda_json` must be a NUL-terminated string; `out` must be writable.
 */
enum ToralStatus toral_presentation_new(uintptr_t k,
                                        uintptr_t n,
                                        const char *lambda_json,
                                        struct ToralPresentation **out);

/**
 * Releases a presentation handle. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and must not be freed twice.
 */
void toral_presentation_free(struct ToralPresentation *p);

/**
 * Serializes the presentation document.
 *
 * # Safety
 * `p` must be a live handle; `out_json` must be writable.
 */
enum ToralStatus toral_presentation_to_json(const struct ToralPresentation *p, char **out_json);

/**
 * Ergodicity verdict as a JSON report.
 *
 * # Safety
 * `p` must be a live handle; `out_json` must be writable.
 */
enum ToralStatus toral_ergodicity(const struct ToralPresentation *p,
                                  uintptr_t bound,
                                  uint32_t radius,
                                  char **out_json);

/**
 * Builds and checks the relative property (T) certificate. `passed` receives
 * 1 when every mechanical step passes and the conclusion is reached, else 0.
 *
 * # Safety
 * `p` must be a live handle; `out_json` and `passed` must be writable.
 */
enum ToralStatus toral_certify(const struct ToralPresentation *p,
                               uintptr_t samples,
                               uint64_t seed,
                               char **out_json,
                               int32_t *passed);

/**
 * Full profile replay for `(k, n, A)` with default knobs and the given seed.
 * `exit_code` receives 0 (consistent), 2 (inconclusive) or 1 (contradiction).
 *
 * # Safety
 * `a_json` must be a NUL-terminated matrix literal (`"[]"` when `k = 0`);
 * `out_json` and `exit_code` must be writable.
 */
enum ToralStatus toral_replay(uintptr_t k,
                              uintptr_t n,
                              const char *a_json,
                              uint64_t seed,
                              char **out_json,
                              int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORAL_RIGIDITY_H */
