#ifndef SALEM_H
#define SALEM_H

/* Generated by cbindgen from salem-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SalemStatus {
  SALEM_STATUS_OK = 0,
  SALEM_STATUS_INVALID_ARGUMENT = 1,
  SALEM_STATUS_PRECONDITION = 2,
  SALEM_STATUS_DEPTH_EXCEEDED = 3,
  SALEM_STATUS_SCHEMA = 4,
  SALEM_STATUS_IO = 5,
  SALEM_STATUS_NULL_POINTER = 6,
  SALEM_STATUS_PANIC = 7,
} SalemStatus;

/**
 * Opaque tree handle.
 */
typedef struct SalemTree SalemTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a variant A tree over base set `x[0..x_len]` modulo `m`.
 *
 * # Safety
 * `x` must point to `x_len` readable values; `out` must be writable.
 */
enum SalemStatus salem_tree_build_a(uint64_t m,
                                    const uint64_t *x,
                                    size_t x_len,
                                    double t,
                                    size_t depth,
                                    uint64_t seed,
                                    struct SalemTree **out);

/**
 * Builds a variant B tree to `depth`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SalemStatus salem_tree_build_b(size_t depth, uint64_t seed, struct SalemTree **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SalemStatus salem_tree_load(const char *path, struct SalemTree **out);

/**
 * # Safety
 * `tree` must be a live handle; `path` a NUL-terminated string.
 */
enum SalemStatus salem_tree_save(const struct SalemTree *tree, const char *path, bool materialize);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `tree` must come from this library and not be used afterwards.
 */
void salem_tree_free(struct SalemTree *tree);

/**
 * Depth of the tree, or 0 for a null handle.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t salem_tree_depth(const struct SalemTree *tree);

/**
 * `μ̂_n(k)` as real and imaginary parts.
 *
 * # Safety
 * `tree` must be a live handle; `re` and `im` writable.
 */
enum SalemStatus salem_mu_hat(const struct SalemTree *tree,
                              size_t n,
                              int64_t k,
                              double *re,
                              double *im);

/**
 * `μ̂_n(ks[i])` into `re[i]`, `im[i]` for `i < len`.
 *
 * # Safety
 * `ks` readable and `re`, `im` writable for `len` elements.
 */
enum SalemStatus salem_mu_hat_batch(const struct SalemTree *tree,
                                    size_t n,
                                    const int64_t *ks,
                                    size_t len,
                                    double *re,
                                    double *im);

/**
 * Runs the level-`n` progression certificate; `certified` receives the verdict.
 *
 * # Safety
 * `tree` must be a live handle; `certified` writable.
 */
enum SalemStatus salem_verify_ap(const struct SalemTree *tree,
                                 size_t n,
                                 bool line,
                                 bool *certified);

/**
 * `μ_n((x − r, x + r))` with `x = x_num/x_den`, `r = r_num/r_den`. The
 * exact value is written to `mass` rounded to `f64`; when `exact` is not
 * null it receives the value as a `"p/q"` string to be released with
 * [`salem_string_free`].
 *
 * # Safety
 * `tree` must be a live handle; `mass` writable; `exact` null or writable.
 */
enum SalemStatus salem_ball_mass(const struct SalemTree *tree,
                                 size_t n,
                                 int64_t x_num,
                                 int64_t x_den,
                                 int64_t r_num,
                                 int64_t r_den,
                                 bool circle,
                                 double *mass,
                                 char **exact);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void salem_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *salem_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SALEM_H */
