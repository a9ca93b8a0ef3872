#ifndef VACOT_H
#define VACOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
enum VacotStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  VACOT_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8, or an out-of-range argument.
   */
  VACOT_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A document failed to parse under the canonical schema.
   */
  VACOT_STATUS_PARSE = 2,
  /**
   * A parsed document failed semantic validation.
   */
  VACOT_STATUS_VALIDATION = 3,
  /**
   * The operation itself failed.
   */
  VACOT_STATUS_EXECUTION = 4,
};
#ifndef __cplusplus
typedef int32_t VacotStatus;
#endif // __cplusplus

/**
 * Opaque checklist handle.
 */
typedef struct VacotChecklist VacotChecklist;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; never free it.
 */
const char *vacot_last_error_message(void);

/**
 * Parses a canonical checklist document into a new handle.
 *
 * # Safety
 * `document` must be a NUL-terminated string and `out` a valid pointer.
 * A non-null result handle must be released with [`vacot_checklist_free`].
 */
VacotStatus vacot_checklist_parse(const char *document, struct VacotChecklist **out);

/**
 * Serializes a checklist back to its canonical document.
 *
 * # Safety
 * `plan` must be a live handle from [`vacot_checklist_parse`]; `out` must be
 * valid. The returned string is released with [`vacot_string_free`].
 */
VacotStatus vacot_checklist_serialize(const struct VacotChecklist *plan, char **out);

/**
 * Number of items in the checklist; zero for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
uintptr_t vacot_checklist_item_count(const struct VacotChecklist *plan);

/**
 * Validates a checklist against a visual context of `context_size` images.
 * Writes the number of violations to `violation_count`; when violations
 * exist, returns `Validation` and stores a joined description in the last
 * error message.
 *
 * # Safety
 * `plan` must be a live handle and `violation_count` a valid pointer.
 */
VacotStatus vacot_checklist_validate(const struct VacotChecklist *plan,
                                     uintptr_t context_size,
                                     uintptr_t *violation_count);

/**
 * Releases a checklist handle. Null is ignored.
 *
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void vacot_checklist_free(struct VacotChecklist *plan);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `string` must be null or a string returned by this library, not yet freed.
 */
void vacot_string_free(char *string);

/**
 * Group-relative advantages: `(r - mean) / max(std, std_floor)` with the
 * population standard deviation, written into `out` (length `len`).
 *
 * # Safety
 * `rewards` and `out` must point to `len` readable/writable doubles.
 */
VacotStatus vacot_group_advantages(const double *rewards,
                                   uintptr_t len,
                                   double std_floor,
                                   double *out);

/**
 * Per-step probability ratio `exp(logp_new - logp_old)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VacotStatus vacot_step_ratio(double logp_new, double logp_old, double *out);

/**
 * The pessimistic clipped surrogate term
 * `min(ratio * advantage, clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)`.
 */
double vacot_clipped_term(double ratio, double advantage, double epsilon);

/**
 * Runs one full simulated inference episode over vector images and returns
 * the trace as a JSON document. `context` is `context_count` images of
 * `dimension` doubles each, laid out row-major.
 *
 * # Safety
 * `prompt` must be NUL-terminated, `context` must hold
 * `context_count * dimension` doubles, and `trace_out` must be valid. The
 * returned string is released with [`vacot_string_free`].
 */
VacotStatus vacot_sim_episode(const char *prompt,
                              const double *context,
                              uintptr_t context_count,
                              uintptr_t dimension,
                              double refinement_rate,
                              double satisfaction_threshold,
                              double noise_scale,
                              uint64_t seed,
                              uintptr_t max_iterations,
                              char **trace_out);

/**
 * Scores a generated vector image against a checklist, a vector context,
 * and a prompt with the deterministic mock scorer suite at unit weights.
 * Returns the reward breakdown as a JSON document.
 *
 * # Safety
 * Pointer arguments follow the same rules as [`vacot_sim_episode`]; `plan`
 * must be a live handle and `generated` must hold `dimension` doubles.
 */
VacotStatus vacot_total_reward_mock(const struct VacotChecklist *plan,
                                    const double *context,
                                    uintptr_t context_count,
                                    uintptr_t dimension,
                                    const double *generated,
                                    const char *prompt,
                                    uint64_t seed,
                                    char **breakdown_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VACOT_H */
