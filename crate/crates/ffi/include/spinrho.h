#ifndef SPINRHO_H
#define SPINRHO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpinrhoStatus {
  SPINRHO_STATUS_OK = 0,
  SPINRHO_STATUS_NULL_POINTER = 1,
  SPINRHO_STATUS_INVALID_ARGUMENT = 2,
  SPINRHO_STATUS_INVALID_SYSTEM = 3,
  SPINRHO_STATUS_DENSE_LIMIT_EXCEEDED = 4,
  SPINRHO_STATUS_FIELDS_NOT_SUPPORTED = 5,
  SPINRHO_STATUS_NUMERICAL = 6,
  SPINRHO_STATUS_UTF8 = 7,
  SPINRHO_STATUS_PANIC = 8,
} SpinrhoStatus;

// Solved levels of a field-free system.
typedef struct SpinrhoSpectrum SpinrhoSpectrum;

// A Heisenberg cluster with optional local fields.
typedef struct SpinrhoSystem SpinrhoSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated,
// truncated to `cap`) and returns its full length without the NUL.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t spinrho_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *spinrho_version(void);

// Creates an `n`-spin system with all couplings zero.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum SpinrhoStatus spinrho_system_new(size_t n_spins, struct SpinrhoSystem **out);

// Parses a TOML system description (`n`, `couplings = [{ i, j, J }]`,
// optional `fields`).
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid handle slot.
enum SpinrhoStatus spinrho_system_from_toml(const char *text, struct SpinrhoSystem **out);

// # Safety
// `sys` must be null or a handle from this library not yet freed.
void spinrho_system_free(struct SpinrhoSystem *sys);

// # Safety
// `sys` must be a live handle.
size_t spinrho_system_n_spins(const struct SpinrhoSystem *sys);

// Sets `J_ij` (1-based, `i != j`).
//
// # Safety
// `sys` must be a live handle.
enum SpinrhoStatus spinrho_system_set_coupling(struct SpinrhoSystem *sys,
                                               size_t i,
                                               size_t j,
                                               double value);

// Sets the field on `site` (1-based) from three doubles.
//
// # Safety
// `sys` must be a live handle and `h` point to three doubles.
enum SpinrhoStatus spinrho_system_set_field(struct SpinrhoSystem *sys,
                                            size_t site,
                                            const double *h);

// Builds and solves the reduced eigenproblem. `tol` is used for both
// clustering and the constraint filter; pass 0 for the default 1e-8.
//
// # Safety
// `sys` must be a live handle and `out` a valid handle slot.
enum SpinrhoStatus spinrho_spectrum_solve(const struct SpinrhoSystem *sys,
                                          double tol,
                                          struct SpinrhoSpectrum **out);

// # Safety
// `spec` must be null or a handle from this library not yet freed.
void spinrho_spectrum_free(struct SpinrhoSpectrum *spec);

// Accepted energies in ascending order.
//
// # Safety
// `spec` must be a live handle; `buf` must hold `cap` doubles.
enum SpinrhoStatus spinrho_spectrum_energies(const struct SpinrhoSpectrum *spec,
                                             double *buf,
                                             size_t cap,
                                             size_t *out_len);

// Eigenvalues of the reduced matrix removed by the constraint filter.
//
// # Safety
// As for [`spinrho_spectrum_energies`].
enum SpinrhoStatus spinrho_spectrum_rejected(const struct SpinrhoSpectrum *spec,
                                             double *buf,
                                             size_t cap,
                                             size_t *out_len);

// Number of basis operators, i.e. the length of coefficient vectors.
//
// # Safety
// `spec` must be a live handle.
size_t spinrho_spectrum_basis_size(const struct SpinrhoSpectrum *spec);

// Pairs of basis operator `index` as a flat `i1, j1, i2, j2, ...` array.
//
// # Safety
// `spec` must be a live handle; `buf` must hold `cap` values.
enum SpinrhoStatus spinrho_spectrum_basis_label(const struct SpinrhoSpectrum *spec,
                                                size_t index,
                                                size_t *buf,
                                                size_t cap,
                                                size_t *out_len);

// Coefficients (identity coefficient 1) of the G-invariant solution of
// `level`, which is the level's eigenprojector divided by its multiplicity.
//
// # Safety
// `spec` must be a live handle; `buf` must hold `cap` doubles.
enum SpinrhoStatus spinrho_spectrum_g_invariant(const struct SpinrhoSpectrum *spec,
                                                size_t level,
                                                double *buf,
                                                size_t cap,
                                                size_t *out_len);

// Coefficients `a_0 .. a_{floor(N/2)}` of the total-spin projector for
// `S = two_s / 2`.
//
// # Safety
// `buf` must hold `cap` doubles and `out_len` be valid.
enum SpinrhoStatus spinrho_total_spin_coefficients(size_t n_spins,
                                                   uint32_t two_s,
                                                   double *buf,
                                                   size_t cap,
                                                   size_t *out_len);

// Largest component of `⟨(h_i + Σ_j J_ij σ_j) × σ_i⟩` in the thermal
// state at `beta`; zero up to rounding.
//
// # Safety
// `sys` must be a live handle and `out` valid.
enum SpinrhoStatus spinrho_torque_residual(const struct SpinrhoSystem *sys,
                                           size_t site,
                                           double beta,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINRHO_H */
