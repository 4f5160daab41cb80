/* SPDX-License-Identifier: Apache-2.0 OR MIT */

#ifndef CDTW_H
#define CDTW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum CdtwStatus {
  CDTW_STATUS_OK = 0,
  CDTW_STATUS_NULL_POINTER = 1,
  CDTW_STATUS_INVALID_ARGUMENT = 2,
  CDTW_STATUS_INVALID_CURVE = 3,
  CDTW_STATUS_INVALID_NORM = 4,
  CDTW_STATUS_NUMERIC = 5,
  CDTW_STATUS_MEMORY_LIMIT = 6,
  CDTW_STATUS_BUFFER_TOO_SMALL = 7,
  CDTW_STATUS_PANIC = 8,
} CdtwStatus;

// A polygonal curve.
typedef struct CdtwCurve CdtwCurve;

// A norm, with its polygonal replacement when it needs one.
typedef struct CdtwNorm CdtwNorm;

// Summary of an approximation.
typedef struct CdtwResult {
  // The approximate distance.
  double value;
  // Guaranteed ratio between `value` and the true distance.
  double factor_bound;
  // Total pieces over all border functions.
  size_t total_pieces;
  // Largest propagation rank.
  size_t max_rank;
  // Waypoints in the witness path.
  size_t witness_len;
} CdtwResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *cdtw_last_error(void);

// Library version as a static string.
const char *cdtw_version(void);

// Builds a curve from `count` points stored as `x0, y0, x1, y1, ...`.
//
// # Safety
// `xy` must point to `2 * count` doubles and `out` must be writable.
enum CdtwStatus cdtw_curve_new(const double *xy, size_t count, struct CdtwCurve **out);

// Number of segments of `curve`, or 0 for null.
//
// # Safety
// `curve` must be null or a live handle.
size_t cdtw_curve_segment_count(const struct CdtwCurve *curve);

// Releases a curve. Null is ignored.
//
// # Safety
// `curve` must be null or a handle not yet freed.
void cdtw_curve_free(struct CdtwCurve *curve);

// Parses a norm: `l1`, `l2`, `linf` or a JSON spec. `epsilon` is the
// accuracy for the 2-norm; pass 0 for the default.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` must be writable.
enum CdtwStatus cdtw_norm_parse(const char *spec, double epsilon, struct CdtwNorm **out);

// The norm whose unit ball is the polygon with `count` vertices
// `x0, y0, x1, y1, ...`; it must be convex and symmetric about the origin.
//
// # Safety
// `xy` must point to `2 * count` doubles and `out` must be writable.
enum CdtwStatus cdtw_norm_polygon(const double *xy, size_t count, struct CdtwNorm **out);

// Approximation factor guaranteed with this norm, or NaN for null.
//
// # Safety
// `norm` must be null or a live handle.
double cdtw_norm_factor_bound(const struct CdtwNorm *norm);

// Releases a norm. Null is ignored.
//
// # Safety
// `norm` must be null or a handle not yet freed.
void cdtw_norm_free(struct CdtwNorm *norm);

// Approximates the distance between `p` and `q`.
//
// If `witness` is not null it receives up to `witness_cap` waypoints of
// the witness path as `s0, t0, s1, t1, ...`; `BufferTooSmall` is returned
// (with `out` filled) when `witness_len` exceeds the capacity.
//
// # Safety
// Handles must be live, `out` writable, and `witness` null or writable
// for `2 * witness_cap` doubles.
enum CdtwStatus cdtw_compute(const struct CdtwCurve *p,
                             const struct CdtwCurve *q,
                             const struct CdtwNorm *norm,
                             struct CdtwResult *out,
                             double *witness,
                             size_t witness_cap);

// Grid reference value with `grid` subdivisions per segment, under the
// exact (not approximated) norm.
//
// # Safety
// Handles must be live and `value`, `lower_hint` writable.
enum CdtwStatus cdtw_oracle(const struct CdtwCurve *p,
                            const struct CdtwCurve *q,
                            const struct CdtwNorm *norm,
                            size_t grid,
                            double *value,
                            double *lower_hint);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDTW_H */
