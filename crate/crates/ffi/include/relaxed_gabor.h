#ifndef RELAXED_GABOR_H
#define RELAXED_GABOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RgStatus {
  RG_STATUS_OK = 0,
  RG_STATUS_NULL_POINTER = 1,
  RG_STATUS_INVALID_ARGUMENT = 2,
  RG_STATUS_NUMERICAL = 3,
  RG_STATUS_PANIC = 4,
} RgStatus;

/**
 * Relaxed expansion of a signal.
 */
typedef struct RgExpansion RgExpansion;

/**
 * Sampled signal on a uniform grid.
 */
typedef struct RgSignal RgSignal;

typedef struct RgComplex {
  double re;
  double im;
} RgComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null.
 */
const char *rg_last_error(void);

/**
 * Copies `len` samples into a new signal on the grid `[-half_width, half_width]`, step `step`.
 *
 * # Safety
 * `values` must point to `len` readable elements and `out` must be writable.
 */
enum RgStatus rg_signal_new(double half_width,
                            double step,
                            const struct RgComplex *values,
                            size_t len,
                            struct RgSignal **out);

/**
 * # Safety
 * `sig` must be null or a handle from this library, not yet freed.
 */
void rg_signal_free(struct RgSignal *sig);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `sig` must be null or a live handle.
 */
size_t rg_signal_len(const struct RgSignal *sig);

/**
 * Copies the samples into `out`, which must hold `len == rg_signal_len(sig)` elements.
 *
 * # Safety
 * `sig` must be a live handle and `out` must point to `len` writable elements.
 */
enum RgStatus rg_signal_values(const struct RgSignal *sig, struct RgComplex *out, size_t len);

/**
 * Normalized Hermite function `h_n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RgStatus rg_hermite(size_t n, double half_width, double step, struct RgSignal **out);

/**
 * Coherent state `e_λ` at `λ = (p, theta)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RgStatus rg_atom(double p,
                      double theta,
                      double half_width,
                      double step,
                      struct RgSignal **out);

/**
 * Relaxed expansion with lattice cutoff `|k|, |j| <= cutoff`.
 *
 * # Safety
 * `sig` must be a live handle and `out` writable.
 */
enum RgStatus rg_expansion_new(const struct RgSignal *sig, size_t cutoff, struct RgExpansion **out);

/**
 * # Safety
 * `exp` must be null or a live handle.
 */
void rg_expansion_free(struct RgExpansion *exp);

/**
 * Coefficient of the sharp atom.
 *
 * # Safety
 * `exp` must be a live handle and `out` writable.
 */
enum RgStatus rg_expansion_sharp(const struct RgExpansion *exp, struct RgComplex *out);

/**
 * Lattice coefficient at `(k, j)`; zero outside the cutoff.
 *
 * # Safety
 * `exp` must be a live handle and `out` writable.
 */
enum RgStatus rg_expansion_lattice(const struct RgExpansion *exp,
                                   int64_t k,
                                   int64_t j,
                                   struct RgComplex *out);

/**
 * Reconstruction from the expansion on the source signal's grid.
 *
 * # Safety
 * `exp` must be a live handle and `out` writable.
 */
enum RgStatus rg_expansion_synthesize(const struct RgExpansion *exp,
                                      double half_width,
                                      double step,
                                      struct RgSignal **out);

/**
 * `Θ(z)` truncated to `|q| <= terms`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RgStatus rg_theta(double re, double im, uint32_t terms, struct RgComplex *out);

/**
 * Localization integral `I(x)`.
 */
double rg_loc_integral(double x);

/**
 * Metaplectic rotation by `angle`.
 *
 * # Safety
 * `sig` must be a live handle and `out` writable.
 */
enum RgStatus rg_metaplectic_apply(const struct RgSignal *sig, double angle, struct RgSignal **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAXED_GABOR_H */
