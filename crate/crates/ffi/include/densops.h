/* C interface to the densops symbolic calculus library. */

#ifndef DENSOPS_H
#define DENSOPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a C API call.
 */
typedef enum DensopsStatus {
  /**
   * The call succeeded.
   */
  DENSOPS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DENSOPS_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DENSOPS_STATUS_INVALID_UTF8 = 2,
  /**
   * The operator or scalar text did not parse.
   */
  DENSOPS_STATUS_PARSE_ERROR = 3,
  /**
   * The inputs were well-formed but rejected (dimension mismatch,
   * singular weight, operator outside the expected shape, …).
   */
  DENSOPS_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A panic was caught at the boundary; this is a bug in the library.
   */
  DENSOPS_STATUS_INTERNAL = 5,
} DensopsStatus;

/**
 * An operator on densities over a fixed chart. Opaque.
 */
typedef struct DensopsOperator DensopsOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread.
 *
 * The pointer is borrowed: it stays valid until the next failing call on
 * the same thread, and must not be freed.
 */
const char *densops_last_error_message(void);

/**
 * Parses an operator written in the expression DSL over an `n`-dimensional
 * chart with coordinates `x1…xn` (for example `"sin(x1)*d1^2 + 2*w"`).
 *
 * On success writes a new handle to `out`; release it with
 * [`densops_operator_free`].
 *
 * # Safety
 * `source` must be a valid NUL-terminated string and `out` valid for a
 * single write.
 */
enum DensopsStatus densops_operator_parse(const char *source,
                                          size_t dim,
                                          struct DensopsOperator **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `op` must be null or a live handle from this library; the handle must not
 * be used afterwards.
 */
void densops_operator_free(struct DensopsOperator *op);

/**
 * Prints an operator in the same grammar the parser accepts.
 *
 * Returns an owned string (release with [`densops_string_free`]), or null
 * if `op` is null.
 *
 * # Safety
 * `op` must be null or a live handle from this library.
 */
char *densops_operator_print(const struct DensopsOperator *op);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, and must not be
 * used afterwards.
 */
void densops_string_free(char *s);

/**
 * Chart dimension of the operator.
 *
 * # Safety
 * `op` must be a live handle and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_dim(const struct DensopsOperator *op, size_t *out);

/**
 * Adjoint with respect to the canonical scalar product on densities.
 *
 * # Safety
 * `op` must be a live handle and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_adjoint(const struct DensopsOperator *op,
                                            struct DensopsOperator **out);

/**
 * Composition `a ∘ b`. The operands must share a chart dimension.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_compose(const struct DensopsOperator *a,
                                            const struct DensopsOperator *b,
                                            struct DensopsOperator **out);

/**
 * Restriction to densities of one weight: ŵ becomes the scalar `weight`,
 * written as a rational like `"3/2"` or `"-1"`.
 *
 * # Safety
 * `op` must be a live handle, `weight` a valid NUL-terminated string, and
 * `out` valid for a single write.
 */
enum DensopsStatus densops_operator_restrict(const struct DensopsOperator *op,
                                             const char *weight,
                                             struct DensopsOperator **out);

/**
 * Whether the operator equals its own adjoint.
 *
 * # Safety
 * `op` must be a live handle and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_is_self_adjoint(const struct DensopsOperator *op, bool *out);

/**
 * Whether two operators are equal as operators on the density algebra.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_equal(const struct DensopsOperator *a,
                                          const struct DensopsOperator *b,
                                          bool *out);

/**
 * The unique self-adjoint operator pencil passing through `op` at weight
 * `lambda0` (a rational outside `{0, 1/2, 1}`, written like `"2"` or
 * `"-1/3"`). The handle must hold a weight-restricted operator: order at
 * most two, no ŵ.
 *
 * # Safety
 * `op` must be a live handle, `lambda0` a valid NUL-terminated string, and
 * `out` valid for a single write.
 */
enum DensopsStatus densops_pencil(const struct DensopsOperator *op,
                                  const char *lambda0,
                                  struct DensopsOperator **out);

/**
 * Sanity check that the operator is canonically self-adjoint: extracts the
 * symbol triple `(S, B, C)` and reports whether extraction succeeded.
 *
 * # Safety
 * `op` must be a live handle and `out` valid for a single write.
 */
enum DensopsStatus densops_operator_is_canonical(const struct DensopsOperator *op, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DENSOPS_H */
