#ifndef OPENKRYLOV_H
#define OPENKRYLOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The nonzero values below 5 match the CLI exit codes.
 */
typedef enum {
  OKV_STATUS_OK = 0,
  OKV_STATUS_CONFIG = 2,
  OKV_STATUS_NUMERICAL = 3,
  OKV_STATUS_PRECONDITION = 4,
  /**
   * Null pointer, index out of range or undersized output buffer.
   */
  OKV_STATUS_INVALID_ARGUMENT = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  OKV_STATUS_PANIC = 6,
} OkvStatus;

typedef enum {
  OKV_BOUNDARY_OPEN = 0,
  OKV_BOUNDARY_DIRICHLET = 1,
  /**
   * Hard wall plus decay `-gamma(2n+1)` on the diagonal.
   */
  OKV_BOUNDARY_DIAGONAL_DISSIPATIVE = 2,
} OkvBoundary;

typedef enum {
  OKV_MODE_CLASS_PERPETUAL = 0,
  OKV_MODE_CLASS_TRANSIENT = 1,
  OKV_MODE_CLASS_GROWING = 2,
} OkvModeClass;

/**
 * Lanczos coefficients, with the Krylov basis when built from a model.
 */
typedef struct OkvChain OkvChain;

typedef struct OkvSpectrum OkvSpectrum;

/**
 * One eigenpair summary of a truncated chain.
 */
typedef struct {
  double re;
  double im;
  int32_t class_;
  double mean_position;
  double residual;
} OkvMode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a chain from TOML run-configuration text. Operator models run
 * Lanczos and keep the Krylov basis so [`okv_quench`] can use it; ideal
 * models produce `b_1..b_{depth+1}` directly.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string and `out` a valid
 * pointer to writable storage for one handle.
 */
OkvStatus okv_chain_from_config(const char *config_toml, OkvChain **out);

/**
 * Wraps caller-supplied coefficients `b_1..b_len`.
 *
 * # Safety
 * `b` must point to `len` readable doubles and `out` to writable storage
 * for one handle.
 */
OkvStatus okv_chain_from_coefficients(const double *b, size_t len, OkvChain **out);

/**
 * Number of coefficients, or 0 for a null handle.
 *
 * # Safety
 * `chain` must be null or a live handle.
 */
size_t okv_chain_len(const OkvChain *chain);

/**
 * Copies `b_1..b_len` into `out`, which must hold `okv_chain_len` values.
 *
 * # Safety
 * `chain` must be a live handle and `out` must point to `cap` writable
 * doubles.
 */
OkvStatus okv_chain_coefficients(const OkvChain *chain, double *out, size_t cap);

/**
 * # Safety
 * `chain` must be null or a handle not yet freed.
 */
void okv_chain_free(OkvChain *chain);

/**
 * Eigen-decomposition of the chain truncated at site `l`. `gamma` is read
 * only for the dissipative boundary.
 *
 * # Safety
 * `chain` must be a live handle and `out` a valid pointer to writable
 * storage for one handle.
 */
OkvStatus okv_spectrum_new(const OkvChain *chain,
                           size_t l,
                           OkvBoundary kind,
                           double gamma,
                           OkvSpectrum **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t okv_spectrum_len(const OkvSpectrum *spec);

/**
 * Mode `index`, in order of decreasing `Im ω`.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid writable pointer.
 */
OkvStatus okv_spectrum_mode(const OkvSpectrum *spec, size_t index, OkvMode *out);

/**
 * # Safety
 * `spec` must be null or a handle not yet freed.
 */
void okv_spectrum_free(OkvSpectrum *spec);

/**
 * Amplitude `φ_site(t)` of the truncated chain started from `φ = δ_{n0}`,
 * written to `out_re[k]`, `out_im[k]` for each `times[k]`.
 *
 * # Safety
 * `chain` must be a live handle; `times`, `out_re` and `out_im` must each
 * point to `n_times` doubles.
 */
OkvStatus okv_evolve(const OkvChain *chain,
                     size_t l,
                     OkvBoundary kind,
                     double gamma,
                     const double *times,
                     size_t n_times,
                     size_t site,
                     double *out_re,
                     double *out_im);

/**
 * Per-site `⟨O_0(t)⟩` after a quench from `|+⟩^⊗N`. Needs a chain built
 * from an operator model by [`okv_chain_from_config`].
 *
 * # Safety
 * `chain` must be a live handle; `times` and `out` must each point to
 * `n_times` doubles.
 */
OkvStatus okv_quench(const OkvChain *chain,
                     size_t l,
                     OkvBoundary kind,
                     const double *times,
                     size_t n_times,
                     double *out);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap - 1` bytes). Returns the full message length in bytes
 * so callers can retry with a larger buffer.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t okv_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *okv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPENKRYLOV_H */
