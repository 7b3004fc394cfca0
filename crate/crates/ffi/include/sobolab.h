#ifndef SOBOLAB_H
#define SOBOLAB_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  SobolabStatus_Ok = 0,
  SobolabStatus_InvalidArgument = 1,
  SobolabStatus_NumericalFailure = 2,
  SobolabStatus_AssertionFailure = 3,
  SobolabStatus_Panic = 4,
} SobolabStatus;

/**
 * Opaque handle to an m-component field on a periodic grid.
 */
typedef struct SobolabField SobolabField;

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sobolab_last_error(void);

/**
 * Create a field from interleaved (re, im) samples, component-major and
 * row-major within each component.
 *
 * # Safety
 * `extents` and `points` must point to `dimension` readable elements;
 * `samples` must point to `2 * components * product(points)` readable
 * doubles. The returned handle must be released with `sobolab_field_free`.
 */
SobolabStatus sobolab_field_create(uintptr_t dimension,
                                   const double *extents,
                                   const uintptr_t *points,
                                   uintptr_t components,
                                   const double *samples,
                                   SobolabField **out_field);

/**
 * Release a field handle. NULL is accepted and ignored.
 *
 * # Safety
 * `field` must be a pointer previously returned by this library and not yet
 * freed.
 */
void sobolab_field_free(SobolabField *field);

/**
 * Total number of stored complex samples (components x grid points).
 *
 * # Safety
 * `field` must be a live handle from this library.
 */
uintptr_t sobolab_field_len(const SobolabField *field);

/**
 * Apply the Bessel potential of order t, producing a new field handle.
 *
 * # Safety
 * `field` must be a live handle; `out_field` must be writable.
 */
SobolabStatus sobolab_bessel_potential(const SobolabField *field,
                                       double t,
                                       SobolabField **out_field);

/**
 * Fractional Sobolev norm ||u||_{H^s}.
 *
 * # Safety
 * `field` must be a live handle; `out_norm` must be writable.
 */
SobolabStatus sobolab_sobolev_norm(const SobolabField *field, double s, double *out_norm);

/**
 * Bilinear dual product of two fields on the same grid.
 *
 * # Safety
 * `a` and `b` must be live handles; `out_re` and `out_im` must be writable.
 */
SobolabStatus sobolab_dual_product(const SobolabField *a,
                                   const SobolabField *b,
                                   double *out_re,
                                   double *out_im);

/**
 * The trace constant C_s, s > 1/2.
 *
 * # Safety
 * `out_value` must be writable.
 */
SobolabStatus sobolab_trace_constant(double s, double *out_value);

/**
 * Run a registered experiment by name with an optional TOML configuration
 * string, writing artifacts under `out_dir`. Names match the CLI
 * subcommands: trace-norm, extension, recover-density, bvp, conormal,
 * green, commutator, product-bound, apriori, regularity, appendix, or
 * suite:acceptance / suite:quick. Returns AssertionFailure when the
 * experiment ran but an asserted bound did not hold.
 *
 * # Safety
 * `name` and `out_dir` must be NUL-terminated strings; `config_toml` may be
 * NULL for defaults.
 */
SobolabStatus sobolab_run_experiment(const char *name,
                                     const char *config_toml,
                                     const char *out_dir);

#endif  /* SOBOLAB_H */
