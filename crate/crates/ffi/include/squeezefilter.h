#ifndef SQUEEZEFILTER_H
#define SQUEEZEFILTER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. Input and numerical failures match the CLI exit codes.
 */
typedef enum SqzStatus {
  SQZ_STATUS_OK = 0,
  SQZ_STATUS_INVALID_INPUT = 1,
  SQZ_STATUS_NUMERICAL = 2,
  SQZ_STATUS_NULL_POINTER = 3,
  SQZ_STATUS_BUFFER_TOO_SMALL = 4,
  SQZ_STATUS_PANIC = 5,
} SqzStatus;

typedef enum SqzPhaseModel {
  SQZ_PHASE_MODEL_ZERO = 0,
  SQZ_PHASE_MODEL_MINIMUM = 1,
} SqzPhaseModel;

typedef enum SqzTraceKind {
  SQZ_TRACE_KIND_AMPLITUDE = 0,
  SQZ_TRACE_KIND_INTENSITY = 1,
} SqzTraceKind;

/*
 Opaque filter response.
 */
typedef struct SqzFilter SqzFilter;

/*
 Opaque scenario built from a JSON configuration.
 */
typedef struct SqzScenario SqzScenario;

/*
 Quadrature covariance in shot-noise units.
 */
typedef struct SqzCovariance {
  double v_plus;
  double v_minus;
  double c_cross;
} SqzCovariance;

/*
 Sideband amplitudes and phases at `+Ω` and `-Ω`.
 */
typedef struct SqzTransmission {
  double t_plus;
  double t_minus;
  double theta_plus;
  double theta_minus;
} SqzTransmission;

typedef struct SqzExtremes {
  double theta_min;
  double v_min;
  double theta_max;
  double v_max;
} SqzExtremes;

/*
 Window `A Γ²/(Γ² + x²) + B Γ x/(Γ² + x²) + C` with `x = δ + δ0`.
 */
typedef struct SqzLineshape {
  double a_sym;
  double b_asym;
  double c_bg;
  double gamma_hz;
  double delta0_hz;
} SqzLineshape;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.

 The pointer stays valid until the next call into the library on the same thread.
 */
const char *sqz_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sqz_version(void);

/*
 Covariance of a squeezed state with eigenvalues `v_min`, `v_max` and
 minimum-noise quadrature at `angle_rad`.
 */
enum SqzStatus sqz_make_covariance(double v_min,
                                   double v_max,
                                   double angle_rad,
                                   struct SqzCovariance *out);

/*
 Rotates a covariance by `phi_rad`.
 */
enum SqzStatus sqz_apply_rotation(const struct SqzCovariance *cov,
                                  double phi_rad,
                                  struct SqzCovariance *out);

/*
 Real sideband transmissions acting on a diagonal covariance.
 */
enum SqzStatus sqz_eq4_propagate(double t_plus,
                                 double t_minus,
                                 const struct SqzCovariance *cov,
                                 struct SqzCovariance *out);

/*
 Complex sideband transmissions acting on any physical covariance.
 */
enum SqzStatus sqz_general_propagate(const struct SqzTransmission *t,
                                     const struct SqzCovariance *cov,
                                     struct SqzCovariance *out);

enum SqzStatus sqz_homodyne_variance(const struct SqzCovariance *cov,
                                     double lo_angle_rad,
                                     double *out);

enum SqzStatus sqz_min_max_quadratures(const struct SqzCovariance *cov, struct SqzExtremes *out);

/*
 Builds a filter valid for sideband frequencies up to `max_omega_hz`.
 */
enum SqzStatus sqz_filter_new(const struct SqzLineshape *lineshape,
                              enum SqzPhaseModel phase_model,
                              double max_omega_hz,
                              struct SqzFilter **out);

enum SqzStatus sqz_filter_eval(const struct SqzFilter *filter,
                               double omega_hz,
                               struct SqzTransmission *out);

/*
 Releases a filter; null is ignored.
 */
void sqz_filter_free(struct SqzFilter *filter);

/*
 Least-squares fit of the window to `len` samples.
 */
enum SqzStatus sqz_fit_lineshape(const double *detuning_hz,
                                 const double *transmission,
                                 uintptr_t len,
                                 enum SqzTraceKind kind,
                                 struct SqzLineshape *out);

/*
 Minimum phase of a magnitude sampled on a uniform grid symmetric about zero.
 */
enum SqzStatus sqz_minimum_phase(const double *offsets_hz,
                                 const double *magnitude,
                                 uintptr_t len,
                                 double *phase_out);

/*
 Builds a scenario from configuration JSON.

 Relative file names inside the JSON resolve against `base_dir`, or the
 working directory when it is null. `seed` drives synthetic trace noise.
 */
enum SqzStatus sqz_scenario_from_json(const char *json,
                                      const char *base_dir,
                                      uint64_t seed,
                                      struct SqzScenario **out);

/*
 Number of frequency points in the scenario grid.
 */
enum SqzStatus sqz_scenario_grid_len(const struct SqzScenario *scenario, uintptr_t *out);

/*
 Predicted spectra in dB relative to shot noise.

 Each buffer holds `len` values; `len` must be at least the grid length.
 `selected_db` follows the configured strategy, which must not be a scan.
 */
enum SqzStatus sqz_scenario_predict(const struct SqzScenario *scenario,
                                    double *frequencies_hz,
                                    double *selected_db,
                                    double *output_min_db,
                                    double *output_max_db,
                                    uintptr_t len);

/*
 Releases a scenario; null is ignored.
 */
void sqz_scenario_free(struct SqzScenario *scenario);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUEEZEFILTER_H */
