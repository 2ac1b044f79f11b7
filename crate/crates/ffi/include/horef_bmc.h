#ifndef HOREF_BMC_H
#define HOREF_BMC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HbmcMode {
  /**
   * Is `fail` reachable?
   */
  HBMC_MODE_FAIL = 0,
  /**
   * Is the bound exhausted on some path?
   */
  HBMC_MODE_NIL = 1,
} HbmcMode;

typedef enum HbmcStatus {
  HBMC_STATUS_OK = 0,
  HBMC_STATUS_NULL_ARGUMENT = 1,
  HBMC_STATUS_INVALID_UTF8 = 2,
  HBMC_STATUS_PARSE_ERROR = 3,
  HBMC_STATUS_TRANSLATE_ERROR = 4,
  HBMC_STATUS_SOLVER_ERROR = 5,
  HBMC_STATUS_SOLVER_TIMEOUT = 6,
  HBMC_STATUS_PANIC = 7,
} HbmcStatus;

typedef enum HbmcVerdictKind {
  /**
   * The query is satisfiable; a model is available.
   */
  HBMC_VERDICT_KIND_COUNTEREXAMPLE = 0,
  /**
   * The query is unsatisfiable at this bound.
   */
  HBMC_VERDICT_KIND_UNSAT = 1,
  /**
   * Neither `fail` nor `nil` is reachable (iteration only).
   */
  HBMC_VERDICT_KIND_VERIFIED = 2,
  /**
   * `nil` was still reachable at the last bound (iteration only).
   */
  HBMC_VERDICT_KIND_BOUND_REACHED = 3,
  HBMC_VERDICT_KIND_UNKNOWN = 4,
} HbmcVerdictKind;

/**
 * A parsed program at a fixed bound.
 */
typedef struct HbmcProgram HbmcProgram;

/**
 * The outcome of a check or an iteration.
 */
typedef struct HbmcResult HbmcResult;

typedef struct HbmcOptions {
  /**
   * Use the points-to analysis.
   */
  bool opt;
  /**
   * Emit only the propagation clauses that can fire.
   */
  bool prune;
  /**
   * Per-query solver timeout; values <= 0 keep the default of 10 s.
   */
  double timeout_secs;
  /**
   * Solver executable, or NULL for `$HOREF_BMC_SOLVER` / `z3`.
   */
  const char *solver_path;
} HbmcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults: points-to analysis and pruning on, 10 s timeout, solver from
 * the environment.
 */
struct HbmcOptions hbmc_options_default(void);

/**
 * The message for the last failed call on this thread, or NULL. Valid
 * until the next call into this library on the same thread.
 */
const char *hbmc_last_error(void);

/**
 * Parses `.bmc` source at bound `bound`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HbmcStatus hbmc_program_parse(const char *src, uint32_t bound, struct HbmcProgram **out);

/**
 * Changes the bound used by later checks.
 *
 * # Safety
 * `p` must be a live program handle.
 */
enum HbmcStatus hbmc_program_set_bound(struct HbmcProgram *p, uint32_t bound);

/**
 * # Safety
 * `p` must be NULL or a handle from [`hbmc_program_parse`] not yet freed.
 */
void hbmc_program_free(struct HbmcProgram *p);

/**
 * Checks one query at the program's bound.
 *
 * # Safety
 * `p` must be a live program handle, `opts` NULL or valid, `out` valid.
 */
enum HbmcStatus hbmc_check(const struct HbmcProgram *p,
                           enum HbmcMode m,
                           const struct HbmcOptions *opts,
                           struct HbmcResult **out);

/**
 * Raises the bound from 0 to `kmax` until a verdict is reached.
 *
 * # Safety
 * As for [`hbmc_check`].
 */
enum HbmcStatus hbmc_iterate(const struct HbmcProgram *p,
                             uint32_t kmax,
                             const struct HbmcOptions *opts,
                             struct HbmcResult **out);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum HbmcVerdictKind hbmc_result_kind(const struct HbmcResult *r);

/**
 * The bound the verdict was reached at.
 *
 * # Safety
 * `r` must be a live result handle.
 */
uint32_t hbmc_result_bound(const struct HbmcResult *r);

/**
 * The result as JSON: `{"bound":1,"inputs":{"n":102},"ret":"fail","reason":null}`.
 * Integers are numbers, pairs are two-element arrays, methods are `"m<id>"`.
 * Free the string with [`hbmc_string_free`].
 *
 * # Safety
 * `r` must be a live result handle and `out` valid.
 */
enum HbmcStatus hbmc_result_json(const struct HbmcResult *r, char **out);

/**
 * # Safety
 * `r` must be NULL or a result handle not yet freed.
 */
void hbmc_result_free(struct HbmcResult *r);

/**
 * The SMT-LIB script for one query, without running the solver.
 *
 * # Safety
 * As for [`hbmc_check`]; free the string with [`hbmc_string_free`].
 */
enum HbmcStatus hbmc_emit_smt(const struct HbmcProgram *p,
                              enum HbmcMode m,
                              const struct HbmcOptions *opts,
                              char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void hbmc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOREF_BMC_H */
