#ifndef GAUSS_EOF_H
#define GAUSS_EOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GeStatus {
  GE_STATUS_OK = 0,
  GE_STATUS_NULL_POINTER = 1,
  GE_STATUS_INVALID_INPUT = 2,
  GE_STATUS_SOLVER_FAILURE = 3,
  /*
   The result has no such field, e.g. the canonical form of a separable state.
   */
  GE_STATUS_NOT_AVAILABLE = 4,
  GE_STATUS_PANIC = 5,
} GeStatus;

/*
 Opaque covariance matrix (with optional first moments).
 */
typedef struct GeCovariance GeCovariance;

/*
 Opaque entanglement-of-formation result.
 */
typedef struct GeEofResult GeEofResult;

typedef struct GeCanonicalForm {
  double r0;
  double theta0;
  double u;
  double v;
  double alpha0;
  double beta0;
} GeCanonicalForm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a covariance from 16 row-major entries in the ordering
 `(x_A, p_A, x_B, p_B)`, with the vacuum equal to `I/2`.

 # Safety
 `rows` must point to 16 readable doubles and `out` to writable storage.
 */
enum GeStatus ge_covariance_new(const double *rows, struct GeCovariance **out);

/*
 Sets the first moments.

 # Safety
 `cov` must come from [`ge_covariance_new`]; `mean` must point to 4 doubles.
 */
enum GeStatus ge_covariance_set_mean(struct GeCovariance *cov, const double *mean);

/*
 # Safety
 `cov` must be null or come from [`ge_covariance_new`] and not be freed twice.
 */
void ge_covariance_free(struct GeCovariance *cov);

/*
 Writes whether the covariance satisfies the uncertainty principle.

 # Safety
 `cov` must be valid and `out` writable.
 */
enum GeStatus ge_covariance_is_physical(const struct GeCovariance *cov, bool *out);

/*
 `<Lambda_theta>` including first moments.

 # Safety
 `cov` must be valid and `out` writable.
 */
enum GeStatus ge_lambda_theta(const struct GeCovariance *cov, double theta, double *out);

/*
 Computes the entanglement of formation with default tolerances.

 # Safety
 `cov` must be valid and `out` writable. The result must be released
 with [`ge_eof_result_free`].
 */
enum GeStatus ge_eof(const struct GeCovariance *cov, struct GeEofResult **out);

/*
 # Safety
 `res` must be valid and `out` writable.
 */
enum GeStatus ge_eof_result_ebits(const struct GeEofResult *res, double *out);

/*
 # Safety
 `res` must be valid and `out` writable.
 */
enum GeStatus ge_eof_result_separable(const struct GeEofResult *res, bool *out);

/*
 Canonical parameters; `NotAvailable` for separable states.

 # Safety
 `res` must be valid and `out` writable.
 */
enum GeStatus ge_eof_result_canonical(const struct GeEofResult *res, struct GeCanonicalForm *out);

/*
 # Safety
 `res` must be null or come from [`ge_eof`] and not be freed twice.
 */
void ge_eof_result_free(struct GeEofResult *res);

/*
 Entanglement in ebits of the two-mode squeezed vacuum with squeezing `r`.
 */
double ge_entanglement_of_squeezing(double r);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length plus one, or 0 if
 there is no error.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t ge_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *ge_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSS_EOF_H */
