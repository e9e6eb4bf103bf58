#ifndef TROPIVOL_H
#define TROPIVOL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TV_STATUS_OK = 0,
  TV_STATUS_NULL_POINTER = 1,
  TV_STATUS_INVALID_UTF8 = 2,
  TV_STATUS_PARSE = 3,
  TV_STATUS_EVALUATION = 4,
  /**
   * A check ran and its two sides differ.
   */
  TV_STATUS_UNEQUAL = 5,
  /**
   * A finite value does not fit the output integer.
   */
  TV_STATUS_OVERFLOW = 6,
  TV_STATUS_PANIC = 7,
} tv_status;

typedef enum {
  TV_ZBAR_KIND_NEG_INF = 0,
  TV_ZBAR_KIND_FINITE = 1,
  TV_ZBAR_KIND_POS_INF = 2,
} tv_zbar_kind;

/**
 * Opaque dimensional function.
 */
typedef struct tv_dimfun tv_dimfun;

/**
 * Opaque Galois lattice with its ramification filtration.
 */
typedef struct tv_galmod tv_galmod;

/**
 * Opaque definable set.
 */
typedef struct tv_set tv_set;

/**
 * An element of ℤ ∪ {±∞}; `value` is meaningful only for `Finite`.
 */
typedef struct {
  tv_zbar_kind kind;
  int64_t value;
} tv_zbar;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *tv_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void tv_string_free(char *s);

/**
 * Runs a CLI verb on a document. `*out` receives the text the command line
 * tool would print (JSON if `json` is nonzero), also when the status is
 * `TV_STATUS_UNEQUAL`.
 *
 * # Safety
 * `verb` and `document` must be NUL-terminated strings; `out` must be
 * writable.
 */
tv_status tv_run(const char *verb, const char *document, bool json, char **out);

/**
 * Parses a `(vfcell …)` or `(union …)` expression.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
tv_status tv_set_parse(const char *src, tv_set **out);

/**
 * # Safety
 * `set` must come from [`tv_set_parse`] and not have been freed.
 */
void tv_set_free(tv_set *set);

/**
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
tv_status tv_set_vol(const tv_set *set, tv_zbar *out);

/**
 * Parses a `(dimfun …)` expression.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
tv_status tv_dimfun_parse(const char *src, tv_dimfun **out);

/**
 * # Safety
 * `phi` must come from [`tv_dimfun_parse`] and not have been freed.
 */
void tv_dimfun_free(tv_dimfun *phi);

/**
 * # Safety
 * `set` and `phi` must be live handles; `out` must be writable.
 */
tv_status tv_integrate(const tv_set *set, const tv_dimfun *phi, tv_zbar *out);

/**
 * Parses a `(galmod …)` expression.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
tv_status tv_galmod_parse(const char *src, tv_galmod **out);

/**
 * # Safety
 * `m` must come from [`tv_galmod_parse`] and not have been freed.
 */
void tv_galmod_free(tv_galmod *m);

/**
 * The torus conductor as a reduced fraction `*num / *den`.
 *
 * # Safety
 * `m` must be a live handle; `num` and `den` must be writable.
 */
tv_status tv_torus_conductor(const tv_galmod *m, int64_t *num, int64_t *den);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROPIVOL_H */
