#ifndef CLM_H
#define CLM_H

/* Generated by cbindgen from clm-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  ClmOk = 0,
  ClmNullArgument = 1,
  ClmInvalidSpec = 2,
  ClmDimensionMismatch = 3,
  ClmNumericFailure = 4,
  ClmResonance = 5,
  ClmIo = 6,
  ClmPanic = 7,
} ClmStatus;

/**
 * Opaque eigendecomposition handle.
 */
typedef struct ClmEigen ClmEigen;

/**
 * Opaque evolution record handle.
 */
typedef struct ClmEvolution ClmEvolution;

/**
 * Opaque lattice Hamiltonian handle.
 */
typedef struct ClmHamiltonian ClmHamiltonian;

/**
 * Rainbow/funnel metrics of a frequency sweep.
 */
typedef struct {
  double slope;
  double r2;
  double funnel_fraction;
  double correlation;
} ClmSweepMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *clm_version(void);

/**
 * Message describing the most recent error on this thread. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *clm_last_error_message(void);

/**
 * Builds the 2D lattice with onsite mass `B(y - ix)`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
ClmStatus clm_build_2d(uintptr_t lx,
                       uintptr_t ly,
                       double tx,
                       double ty,
                       double b,
                       ClmHamiltonian **out);

/**
 * Builds the 1D nonreciprocal chain; `random_mass != 0` draws the onsite
 * masses from the seeded uniform distribution instead of the linear ramp.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
ClmStatus clm_build_1d_nonreciprocal(uintptr_t n,
                                     double t,
                                     double b,
                                     int32_t random_mass,
                                     uint64_t seed,
                                     ClmHamiltonian **out);

/**
 * Builds the 1D gain/loss chain (imaginary onsite mass).
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
ClmStatus clm_build_1d_gainloss(uintptr_t n,
                                double t,
                                double b,
                                int32_t random_mass,
                                uint64_t seed,
                                ClmHamiltonian **out);

/**
 * # Safety
 * `h` must come from a `clm_build_*` call and not have been freed.
 */
void clm_hamiltonian_free(ClmHamiltonian *h);

/**
 * Matrix dimension, or 0 for a null handle.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
uintptr_t clm_hamiltonian_dim(const ClmHamiltonian *h);

/**
 * Reads one matrix entry.
 *
 * # Safety
 * Pointers must be valid; `h` must be a live handle.
 */
ClmStatus clm_hamiltonian_entry(const ClmHamiltonian *h,
                                uintptr_t row,
                                uintptr_t col,
                                double *re,
                                double *im);

/**
 * ||H - H^dagger||_F, or -1.0 for a null handle.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
double clm_hermiticity_defect(const ClmHamiltonian *h);

/**
 * Box half-widths bounding the mode-family energies for this model.
 *
 * # Safety
 * Pointers must be valid; `h` must be a live handle.
 */
ClmStatus clm_energy_bounds(const ClmHamiltonian *h, double *re_max, double *im_max);

/**
 * y = H v for interleaved complex buffers of length 2n.
 *
 * # Safety
 * `v` and `out` must point to `2 * dim` doubles; `h` must be live.
 */
ClmStatus clm_hamiltonian_apply(const ClmHamiltonian *h, const double *v, double *out);

/**
 * Full eigendecomposition; `tol` scales the QR deflation threshold (pass
 * 0 for the 1e-12 default).
 *
 * # Safety
 * `h` must be live; `out` must be a valid handle slot.
 */
ClmStatus clm_eig(const ClmHamiltonian *h, double tol, ClmEigen **out);

/**
 * # Safety
 * `e` must come from `clm_eig` and not have been freed.
 */
void clm_eigen_free(ClmEigen *e);

/**
 * Number of eigenpairs, or 0 for a null handle.
 *
 * # Safety
 * `e` must be a live handle or null.
 */
uintptr_t clm_eigen_n(const ClmEigen *e);

/**
 * Copies the eigenvalues into `re`/`im` (each length n, sorted by (Re, Im)).
 *
 * # Safety
 * Arrays must hold n doubles; `e` must be live.
 */
ClmStatus clm_eigen_values(const ClmEigen *e, double *re, double *im);

/**
 * Copies the eigenpair residuals ||H v - lambda v|| (length n).
 *
 * # Safety
 * `out` must hold n doubles; `e` must be live.
 */
ClmStatus clm_eigen_residuals(const ClmEigen *e, double *out);

/**
 * Copies eigenvector k as interleaved doubles (length 2n, unit L2).
 *
 * # Safety
 * `out` must hold 2n doubles; `e` must be live.
 */
ClmStatus clm_eigen_vector(const ClmEigen *e, uintptr_t k, double *out);

/**
 * Per-state statistics: participation ratio and |psi|^2-weighted centered
 * positions (arrays of length n).
 *
 * # Safety
 * Arrays must hold n doubles; handles must be live and match.
 */
ClmStatus clm_eigen_stats(const ClmHamiltonian *h,
                          const ClmEigen *e,
                          double *pr,
                          double *mean_x,
                          double *mean_y);

/**
 * Participation ratio of an interleaved complex vector; -1.0 on a zero or
 * null vector.
 *
 * # Safety
 * `v` must hold 2n doubles or be null.
 */
double clm_participation_ratio(const double *v, uintptr_t n);

/**
 * Steady-state amplitudes |psi_j| under the seeded random-phase drive:
 * psi = kappa (omega I - H + i gamma I)^{-1} d.
 *
 * # Safety
 * `amplitudes` must hold n doubles; `solve_residual` may be null.
 */
ClmStatus clm_steady_state(const ClmHamiltonian *h,
                           double omega,
                           double kappa,
                           double gamma,
                           uint64_t seed,
                           double *amplitudes,
                           double *solve_residual);

/**
 * Frequency sweep with one shared drive, reduced to trapping metrics.
 * `window_fraction` is the trailing-site share for the funnel count.
 *
 * # Safety
 * `omegas` must hold `n_omega` doubles; `out` must be valid.
 */
ClmStatus clm_sweep_metrics(const ClmHamiltonian *h,
                            const double *omegas,
                            uintptr_t n_omega,
                            double kappa,
                            double gamma,
                            uint64_t seed,
                            double window_fraction,
                            ClmSweepMetrics *out);

/**
 * RK4 evolution of an interleaved initial state under the lattice
 * Hamiltonian, recording moments every `record_every` steps.
 *
 * # Safety
 * `psi0` must hold 2n doubles; `out` must be a valid handle slot.
 */
ClmStatus clm_evolve(const ClmHamiltonian *h,
                     const double *psi0,
                     double dt,
                     double t_final,
                     uintptr_t record_every,
                     ClmEvolution **out);

/**
 * # Safety
 * `e` must come from `clm_evolve` and not have been freed.
 */
void clm_evolution_free(ClmEvolution *e);

/**
 * Number of recorded samples.
 *
 * # Safety
 * `e` must be a live handle or null.
 */
uintptr_t clm_evolution_len(const ClmEvolution *e);

/**
 * Reads one recorded sample. Null output pointers are skipped.
 *
 * # Safety
 * `e` must be live; non-null outputs must be valid doubles.
 */
ClmStatus clm_evolution_row(const ClmEvolution *e,
                            uintptr_t i,
                            double *t,
                            double *center_x,
                            double *center_y,
                            double *width_x,
                            double *width_y,
                            double *log_norm);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CLM_H */
