#ifndef NODAL_LAB_H
#define NODAL_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NlManifold {
  NL_MANIFOLD_TORUS2 = 0,
  NL_MANIFOLD_SPHERE2 = 1,
  NL_MANIFOLD_TORUS3 = 2,
} NlManifold;

typedef enum NlStatus {
  NL_STATUS_OK = 0,
  NL_STATUS_NULL_POINTER = 1,
  NL_STATUS_INVALID_ARGUMENT = 2,
  NL_STATUS_NOT_AN_EIGENVALUE = 3,
  NL_STATUS_CHART_ESCAPE = 4,
  NL_STATUS_NUMERICAL = 5,
  NL_STATUS_RESOLUTION = 6,
  NL_STATUS_PRECONDITION = 7,
  NL_STATUS_EMPTY_NODAL_SET = 8,
  NL_STATUS_UNSUPPORTED = 9,
  NL_STATUS_IO = 10,
  NL_STATUS_PANIC = 11,
} NlStatus;

/**
 * Opaque eigenfunction handle.
 */
typedef struct NlEigenfunction NlEigenfunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Random unit-norm eigenfunction with eigenvalue `lambda`, reproducible from `seed`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum NlStatus nl_eigen_synth_random(enum NlManifold manifold,
                                    uint64_t lambda,
                                    uint64_t seed,
                                    struct NlEigenfunction **out);

/**
 * `Σ cos_coef[i]·cos⟨k_i,x⟩ + sin_coef[i]·sin⟨k_i,x⟩` on a flat torus.
 * `k` holds `count` frequency vectors of the manifold's dimension, row-major;
 * all must share the same `|k|²`.
 *
 * # Safety
 * `k` must hold `count·dim` values, `cos_coef` and `sin_coef` `count` values each;
 * `out` must be null or valid for writes.
 */
enum NlStatus nl_eigen_from_torus_modes(enum NlManifold manifold,
                                        const int64_t *k,
                                        const double *cos_coef,
                                        const double *sin_coef,
                                        size_t count,
                                        struct NlEigenfunction **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `h` must be null or a handle from this library that was not freed yet.
 */
void nl_eigen_free(struct NlEigenfunction *h);

/**
 * # Safety
 * `h` must be a live handle; `out` must be valid for writes.
 */
enum NlStatus nl_eigen_lambda(const struct NlEigenfunction *h, uint64_t *out);

/**
 * Coordinates per point: 2 on Torus2 and on the sphere's northern cap chart, 3 on Torus3.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid for writes.
 */
enum NlStatus nl_eigen_dim(const struct NlEigenfunction *h, size_t *out);

/**
 * Value at `point`, in the default chart of the manifold.
 *
 * # Safety
 * `h` must be a live handle, `point` must hold `len` values and `out` must be valid for writes.
 */
enum NlStatus nl_eigen_evaluate(const struct NlEigenfunction *h,
                                const double *point,
                                size_t len,
                                double *out);

/**
 * Chart gradient at `point`, written to `out[0..len]`.
 *
 * # Safety
 * `h` must be a live handle; `point` and `out` must hold `len` values.
 */
enum NlStatus nl_eigen_gradient(const struct NlEigenfunction *h,
                                const double *point,
                                size_t len,
                                double *out);

/**
 * Doubling index `N` with `l = 5` on the cube `(center, half_side)`. With
 * `lifted`, the index is that of `u(x)·e^{√λ t}` and `center` carries `t` last.
 *
 * # Safety
 * `h` must be a live handle, `center` must hold `len` values and `out` must be valid for writes.
 */
enum NlStatus nl_doubling_index(const struct NlEigenfunction *h,
                                const double *center,
                                size_t len,
                                double half_side,
                                bool lifted,
                                double *out);

/**
 * Length (2D) or area (3D) of the whole nodal set. `resolution = 0` picks
 * the smallest admissible grid.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid for writes.
 */
enum NlStatus nl_nodal_measure(const struct NlEigenfunction *h, size_t resolution, double *out);

/**
 * `P(Bin(j, 1/Y) ≥ j/(2Y))`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NlStatus nl_lln_tail(uint32_t j, uint64_t y, double *out);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`) and returns its full length in bytes.
 *
 * # Safety
 * `buf` must be null or hold `cap` writable bytes.
 */
size_t nl_last_error(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NODAL_LAB_H */
