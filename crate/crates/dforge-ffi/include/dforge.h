#ifndef DFORGE_H
#define DFORGE_H

/* Generated by cbindgen from src/lib.rs; edits are overwritten. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function in this interface.
 */
typedef enum DforgeStatus {
  DFORGE_STATUS_OK = 0,
  /**
   * Bad parameters, such as `q >= p`.
   */
  DFORGE_STATUS_PARAM = 1,
  /**
   * A required pointer argument was null.
   */
  DFORGE_STATUS_NULL_POINTER = 2,
  /**
   * An explicit construction would exceed the letter budget.
   */
  DFORGE_STATUS_BUDGET = 3,
  /**
   * A check ran and failed, or an internal assertion tripped.
   */
  DFORGE_STATUS_FAILED = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  DFORGE_STATUS_PANIC = 5,
} DforgeStatus;

/**
 * Opaque presentation handle.
 */
typedef struct DforgePresentation DforgePresentation;

/**
 * Summary of one witness pair in counting mode.
 */
typedef struct DforgeWitnessSummary {
  uint64_t n;
  uint64_t w_len;
  uint64_t ub0_len;
  uint64_t a2_count;
  double chi_lower_bound_log;
} DforgeWitnessSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dforge_last_error(void);

/**
 * Builds the presentation for `(p, q, scale)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DforgeStatus dforge_presentation_new(uint32_t p,
                                          uint32_t q,
                                          uint32_t scale,
                                          struct DforgePresentation **out);

/**
 * Releases a handle from [`dforge_presentation_new`]. Null is ignored.
 *
 * # Safety
 * `pres` must be null or a handle not yet freed.
 */
void dforge_presentation_free(struct DforgePresentation *pres);

/**
 * Number of defining relators.
 *
 * # Safety
 * `pres` must be a live handle and `out` writable.
 */
enum DforgeStatus dforge_presentation_relator_count(const struct DforgePresentation *pres,
                                                    uint64_t *out);

/**
 * Shortest relator length.
 *
 * # Safety
 * `pres` must be a live handle and `out` writable.
 */
enum DforgeStatus dforge_presentation_min_relator_len(const struct DforgePresentation *pres,
                                                      uint64_t *out);

/**
 * Runs the structural census; fails if any Rips word is misallocated.
 *
 * # Safety
 * `pres` must be a live handle.
 */
enum DforgeStatus dforge_presentation_census(const struct DforgePresentation *pres);

/**
 * Presentation file text. Release it with [`dforge_string_free`].
 *
 * # Safety
 * `pres` must be a live handle and `out` writable.
 */
enum DforgeStatus dforge_presentation_serialize(const struct DforgePresentation *pres, char **out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void dforge_string_free(char *s);

/**
 * Analytic small-cancellation check; `*holds` is set to whether all four
 * conditions are certified.
 *
 * # Safety
 * `pres` must be a live handle and `holds` writable.
 */
enum DforgeStatus dforge_check_sc_analytic(const struct DforgePresentation *pres, bool *holds);

/**
 * Counting-mode witness for `n`.
 *
 * # Safety
 * `pres` must be a live handle and `out` writable.
 */
enum DforgeStatus dforge_witness_counting(const struct DforgePresentation *pres,
                                          uint64_t n,
                                          struct DforgeWitnessSummary *out);

/**
 * Builds the explicit witness for `n`, replays its derivation and checks
 * `w_n chi_n^-1` by Britton reduction. `*verified` is true iff both pass.
 *
 * # Safety
 * `pres` must be a live handle and `verified` writable.
 */
enum DforgeStatus dforge_verify_witness(const struct DforgePresentation *pres,
                                        uint64_t n,
                                        bool *verified);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFORGE_H */
