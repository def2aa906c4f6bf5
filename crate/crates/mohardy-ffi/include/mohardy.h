#ifndef MOHARDY_H
#define MOHARDY_H

#pragma once

/* Generated by cbindgen from crates/mohardy-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum MohardyStatus {
  // Success.
  MOHARDY_STATUS_OK = 0,
  // A required pointer argument was null.
  MOHARDY_STATUS_NULL_POINTER = 1,
  // Invalid argument, shape or value.
  MOHARDY_STATUS_INVALID_ARGUMENT = 2,
  // Malformed φ-spec or input text.
  MOHARDY_STATUS_PARSE = 3,
  // A numerical routine failed (non-convergence, non-finite φ, ...).
  MOHARDY_STATUS_NUMERICAL = 4,
  // Hypothesis checks rejected a strict-mode campaign.
  MOHARDY_STATUS_HYPOTHESIS = 5,
  // File or serialisation error.
  MOHARDY_STATUS_IO = 6,
  // The output buffer is too small; the required length was written.
  MOHARDY_STATUS_BUFFER_TOO_SMALL = 7,
  // A panic was caught at the boundary.
  MOHARDY_STATUS_PANIC = 8,
} MohardyStatus;

// Which Walsh-Fourier operator [`mohardy_walsh_apply`] evaluates.
typedef enum MohardyWalshOp {
  // Partial sum `s_n f`.
  MOHARDY_WALSH_OP_PARTIAL_SUM = 0,
  // Fejér mean `σ_n f` (`n >= 1`).
  MOHARDY_WALSH_OP_FEJER_MEAN = 1,
  // Maximal Fejér operator `σ_* f` (`n` ignored).
  MOHARDY_WALSH_OP_MAXIMAL_FEJER = 2,
} MohardyWalshOp;

// Opaque leaf-sampled function on a dyadic grid.
typedef struct MohardyFunction MohardyFunction;

// Opaque dyadic martingale.
typedef struct MohardyMartingale MohardyMartingale;

// Opaque Musielak-Orlicz function.
typedef struct MohardyPhi MohardyPhi;

// Norms of one martingale in the five Hardy-type spaces.
typedef struct MohardyHardyNorms {
  // `‖M f‖_φ`.
  double h_max;
  // `‖S f‖_φ`.
  double h_square;
  // `‖s f‖_φ`.
  double h_cond;
  // `P_φ` quasi-norm.
  double p;
  // `Q_φ` quasi-norm.
  double q;
} MohardyHardyNorms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message of the last failure on this thread into `buf` (nul-terminated,
// truncated to `capacity`) and returns its full length in bytes, or 0 when there is none.
//
// # Safety
// `buf` must be null or point to `capacity` writable bytes.
uintptr_t mohardy_last_error(char *buf, uintptr_t capacity);

// Parses a φ-spec such as `power:p=2` into a new handle.
//
// # Safety
// `spec` must be a nul-terminated string; `out` must be writable.
enum MohardyStatus mohardy_phi_parse(const char *spec, struct MohardyPhi **out);

// Evaluates `φ(x, t)`.
//
// # Safety
// `phi` must be a live handle; `out` must be writable.
enum MohardyStatus mohardy_phi_eval(const struct MohardyPhi *phi, double x, double t, double *out);

// Releases a φ handle; null is ignored.
//
// # Safety
// `phi` must be null or a handle not yet freed.
void mohardy_phi_free(struct MohardyPhi *phi);

// Creates a function from `len` leaf values; `len` must be a power of two.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum MohardyStatus mohardy_function_new(const double *values,
                                        uintptr_t len,
                                        struct MohardyFunction **out);

// Number of leaves of a function.
//
// # Safety
// `f` must be a live handle; `out` must be writable.
enum MohardyStatus mohardy_function_len(const struct MohardyFunction *f, uintptr_t *out);

// Copies the leaf values into `out`; `required` (optional) receives the length.
//
// # Safety
// `f` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
enum MohardyStatus mohardy_function_values(const struct MohardyFunction *f,
                                           double *out,
                                           uintptr_t capacity,
                                           uintptr_t *required);

// Releases a function handle; null is ignored.
//
// # Safety
// `f` must be null or a handle not yet freed.
void mohardy_function_free(struct MohardyFunction *f);

// The modular `∫ φ(x, |f(x)|) dx`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MohardyStatus mohardy_modular(const struct MohardyPhi *phi,
                                   const struct MohardyFunction *f,
                                   double *out);

// The Luxemburg norm `‖f‖_φ`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MohardyStatus mohardy_luxemburg_norm(const struct MohardyPhi *phi,
                                          const struct MohardyFunction *f,
                                          double *out);

// The martingale `f_n = E_n f` (minus `E f` when `center` is nonzero).
//
// # Safety
// `f` must be a live handle; `out` must be writable.
enum MohardyStatus mohardy_martingale_of(const struct MohardyFunction *f,
                                         bool center,
                                         struct MohardyMartingale **out);

// Grid resolution `N` of a martingale.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum MohardyStatus mohardy_martingale_resolution(const struct MohardyMartingale *m, uint32_t *out);

// Copies level `n` of a martingale into `out`.
//
// # Safety
// `m` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
enum MohardyStatus mohardy_martingale_level(const struct MohardyMartingale *m,
                                            uint32_t n,
                                            double *out,
                                            uintptr_t capacity,
                                            uintptr_t *required);

// Releases a martingale handle; null is ignored.
//
// # Safety
// `m` must be null or a handle not yet freed.
void mohardy_martingale_free(struct MohardyMartingale *m);

// The five Hardy-type norms of a martingale.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MohardyStatus mohardy_hardy_norms(const struct MohardyMartingale *m,
                                       const struct MohardyPhi *phi,
                                       struct MohardyHardyNorms *out);

// Paley-ordered Walsh coefficients of `f`.
//
// # Safety
// `f` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
enum MohardyStatus mohardy_walsh_analyze(const struct MohardyFunction *f,
                                         double *out,
                                         uintptr_t capacity,
                                         uintptr_t *required);

// Applies a Walsh-Fourier operator of order `n` to `f`, returning a new handle.
//
// # Safety
// `f` must be a live handle; `out` must be writable.
enum MohardyStatus mohardy_walsh_apply(const struct MohardyFunction *f,
                                       enum MohardyWalshOp op,
                                       uintptr_t n,
                                       struct MohardyFunction **out);

// Runs a verification campaign described by a JSON configuration and returns the
// JSON report as a new string, released with [`mohardy_string_free`].
//
// The configuration has the fields `inequality`, `phi_spec`, `resolutions`,
// `trials`, `seed`, `r`, `law`, `exploratory`, `stability` and `ceiling`.
//
// # Safety
// `config_json` must be nul-terminated; `out` must be writable.
enum MohardyStatus mohardy_verify_json(const char *config_json, char **out);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void mohardy_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOHARDY_H */
