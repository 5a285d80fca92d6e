#ifndef PFRAD_H
#define PFRAD_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PfradStatus {
  PFRAD_STATUS_OK = 0,
  PFRAD_STATUS_NULL_POINTER = 1,
  PFRAD_STATUS_DOMAIN = 2,
  PFRAD_STATUS_POLE = 3,
  PFRAD_STATUS_CUT = 4,
  PFRAD_STATUS_BRANCH = 5,
  PFRAD_STATUS_ACCURACY = 6,
  PFRAD_STATUS_CONDITIONING = 7,
  PFRAD_STATUS_SIZE = 8,
  PFRAD_STATUS_SINGULAR = 9,
  PFRAD_STATUS_CONSTRUCTION = 10,
  PFRAD_STATUS_CONFIG = 11,
  PFRAD_STATUS_UTF8 = 12,
  PFRAD_STATUS_PANIC = 13,
} PfradStatus;

// Opaque handle to solved parameters.
typedef struct PfradSetup PfradSetup;

typedef struct PfradComplex {
  double re;
  double im;
} PfradComplex;

// Runaway rate, resonance poles and normalization constants.
typedef struct PfradSpectral {
  double lambda_e;
  struct PfradComplex z_plus;
  struct PfradComplex z_minus;
  double omega_e;
  double gamma_e;
  double kappa0;
  double kappa1;
  double kappa2;
  double kappa;
  double projection_weight;
} PfradSpectral;

// Survival amplitude at one time.
typedef struct PfradSurvival {
  double t;
  struct PfradComplex s;
  struct PfradComplex s_hat;
  // The four-term sum before the normalization prefactor.
  struct PfradComplex total;
  double error;
} PfradSurvival;

// Quadrature oracle value with its error estimate.
typedef struct PfradOracle {
  struct PfradComplex value;
  double error;
  bool converged;
} PfradOracle;

// Emitted photon: frequency, regularization, unit direction and polarization.
typedef struct PfradPhoton {
  double nu;
  double eps;
  double k[3];
  struct PfradComplex zeta[3];
} PfradPhoton;

// Emission amplitude at one time.
typedef struct PfradTransition {
  double t;
  double eps;
  // Scalar amplitude before the geometric factor.
  struct PfradComplex total;
  struct PfradComplex geometric;
  struct PfradComplex amplitude;
  double error;
} PfradTransition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *pfrad_status_string(enum PfradStatus status);

// Copies the last error message of this thread into `buf` (nul-terminated,
// truncated to `len`). Returns the length the full message needs, including
// the terminator. `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t pfrad_last_error(char *buf, size_t len);

// Library version as a static string.
const char *pfrad_version(void);

// Solves the spectral data for the given parameters.
//
// # Safety
// `out` must be valid for writing a handle pointer.
enum PfradStatus pfrad_setup_new(double e,
                                 double m,
                                 double c,
                                 double omega0,
                                 double hbar,
                                 struct PfradSetup **out);

// Releases a handle from [`pfrad_setup_new`]. Null is ignored.
//
// # Safety
// `setup` must be null or a live handle not freed before.
void pfrad_setup_free(struct PfradSetup *setup);

// # Safety
// `setup` must be a live handle and `out` valid for writing.
enum PfradStatus pfrad_setup_spectral(const struct PfradSetup *setup, struct PfradSpectral *out);

// Survival amplitude of the oscillator level at time `t` (nonzero).
//
// # Safety
// `setup` must be a live handle and `out` valid for writing.
enum PfradStatus pfrad_survival(const struct PfradSetup *setup,
                                double t,
                                struct PfradSurvival *out);

// Survival amplitudes S(t) at `n` times. Stops at the first failing time.
//
// # Safety
// `times` must be valid for `n` reads and `out` for `n` writes.
enum PfradStatus pfrad_survival_series(const struct PfradSetup *setup,
                                       const double *times,
                                       size_t n,
                                       struct PfradComplex *out);

// Independent quadrature value of the survival amplitude S(t).
//
// # Safety
// `setup` must be a live handle and `out` valid for writing.
enum PfradStatus pfrad_survival_oracle(const struct PfradSetup *setup,
                                       double t,
                                       struct PfradOracle *out);

// Emission amplitude at time `t` from the level with polarization `level`
// (three complex entries). `photon->eps == 0` gives the regularization limit.
//
// # Safety
// All pointers must be valid; `level` must point to three entries.
enum PfradStatus pfrad_transition(const struct PfradSetup *setup,
                                  double t,
                                  const struct PfradPhoton *photon,
                                  const struct PfradComplex *level,
                                  struct PfradTransition *out);

// Independent quadrature value of the scalar emission amplitude (`total`) at `t`.
//
// # Safety
// All pointers must be valid.
enum PfradStatus pfrad_transition_oracle(const struct PfradSetup *setup,
                                         double t,
                                         const struct PfradPhoton *photon,
                                         struct PfradOracle *out);

// Runs the verification suite. `config` is configuration text (null for
// defaults). On success `*passed` tells whether every check passed and
// `*report` receives the JSON report, to be freed with [`pfrad_string_free`].
//
// # Safety
// `config` must be null or a nul-terminated string; `passed` and `report`
// must be valid for writing (`report` may be null to skip the report).
enum PfradStatus pfrad_verify(const char *config, bool *passed, char **report);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not freed before.
void pfrad_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFRAD_H */
