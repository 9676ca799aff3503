#ifndef LCSFID_H
#define LCSFID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// How an ensemble value was obtained.
typedef enum LcsfidIntegrator {
  LCSFID_INTEGRATOR_EXACT = 0,
  LCSFID_INTEGRATOR_GAUSS_HERMITE = 1,
  LCSFID_INTEGRATOR_ADAPTIVE_SIMPSON = 2,
  LCSFID_INTEGRATOR_MONTE_CARLO = 3,
} LcsfidIntegrator;

typedef enum LcsfidMethod {
  LCSFID_METHOD_QUADRATURE = 0,
  LCSFID_METHOD_MONTE_CARLO = 1,
} LcsfidMethod;

typedef enum LcsfidStatus {
  LCSFID_STATUS_OK = 0,
  LCSFID_STATUS_NULL_POINTER = 1,
  LCSFID_STATUS_INVALID_ARGUMENT = 2,
  LCSFID_STATUS_CONVERGENCE = 3,
  LCSFID_STATUS_PULSE_OVERLAP = 4,
  LCSFID_STATUS_OUT_OF_RANGE = 5,
  LCSFID_STATUS_PANIC = 6,
} LcsfidStatus;

// Opaque device description.
typedef struct LcsfidDevice LcsfidDevice;

// Integration settings. Fill with [`lcsfid_options_default`]; a null
// pointer anywhere an options pointer is accepted means the defaults.
typedef struct LcsfidOptions {
  // An [`LcsfidMethod`] value.
  int32_t method;
  uint32_t hermite_order;
  uint64_t mc_samples;
  uint64_t seed;
  double rel_tolerance;
  // Detection window in Larmor periods; zero, negative or infinite
  // disables truncation.
  double t_bin;
  // Nonzero: Monte Carlo averages the density-matrix simulation instead
  // of the closed form.
  int32_t oracle_integrand;
} LcsfidOptions;

typedef struct LcsfidResult {
  double value;
  double std_error;
  uint64_t evaluations;
  enum LcsfidIntegrator integrator;
  // Cycle lengthening applied, in Larmor periods.
  double cycle_shift;
} LcsfidResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lcsfid_version(void);

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into the library from the
// same thread.
const char *lcsfid_last_error(void);

struct LcsfidOptions lcsfid_options_default(void);

// Creates a device from lifetime and dephasing time (seconds), the
// excited-to-ground g-factor ratio and the Larmor period (seconds).
// `t2_star` may be `INFINITY`.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum LcsfidStatus lcsfid_device_new(double tau_d,
                                    double t2_star,
                                    double g_ratio,
                                    double t_lg,
                                    struct LcsfidDevice **out);

// Creates a device from Landé factors and a magnetic field in tesla.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum LcsfidStatus lcsfid_device_new_field(double tau_d,
                                          double t2_star,
                                          double g_ground,
                                          double g_excited,
                                          double field_b,
                                          struct LcsfidDevice **out);

// Releases a device. Null is ignored.
//
// # Safety
// `dev` must be null or a pointer obtained from `lcsfid_device_new*` that
// has not been freed.
void lcsfid_device_free(struct LcsfidDevice *dev);

// Larmor period of the device in seconds.
//
// # Safety
// `dev` must be a live device handle or null; `out` valid or null.
enum LcsfidStatus lcsfid_device_t_lg(const struct LcsfidDevice *dev, double *out);

// Ensemble gate fidelity; with `corrected` nonzero the cycle shift that
// maximizes it is applied and reported.
//
// # Safety
// `dev` must be a live device handle or null; `opts` null or valid; `out`
// valid or null.
enum LcsfidStatus lcsfid_gate_fidelity(const struct LcsfidDevice *dev,
                                       int32_t corrected,
                                       const struct LcsfidOptions *opts,
                                       struct LcsfidResult *out);

// Ensemble state fidelity of an `photons`-photon cluster under nominal or
// corrected timing.
//
// # Safety
// As for [`lcsfid_gate_fidelity`].
enum LcsfidStatus lcsfid_state_fidelity(const struct LcsfidDevice *dev,
                                        size_t photons,
                                        int32_t corrected,
                                        const struct LcsfidOptions *opts,
                                        struct LcsfidResult *out);

// Ensemble state fidelity for explicit pulse offsets `e_0 … e_{n+1}` (Larmor
// periods, `e_0 = 0`); the photon count is `len - 2`.
//
// # Safety
// `offsets` must point to `len` doubles; other pointers as for
// [`lcsfid_gate_fidelity`].
enum LcsfidStatus lcsfid_state_fidelity_offsets(const struct LcsfidDevice *dev,
                                                const double *offsets,
                                                size_t len,
                                                const struct LcsfidOptions *opts,
                                                struct LcsfidResult *out);

// Closed-form state fidelity of a rotation-error vector (`len >= 2`).
//
// # Safety
// `errors` must point to `len` doubles; `out` valid or null.
enum LcsfidStatus lcsfid_closed_form_state_fidelity(const double *errors, size_t len, double *out);

// Gate fidelity `cos²(e/2)` of a single rotation error.
//
// # Safety
// `out` must be valid or null.
enum LcsfidStatus lcsfid_closed_form_gate_fidelity(double error, double *out);

// Fidelity of one simulated run: pulse offsets (`n + 2` entries), realized
// precession frequency and excited-state dwell times (`n + 2` entries).
//
// # Safety
// `offsets` and `decay_times` must point to `len` doubles each; `dev` and
// `out` as for [`lcsfid_gate_fidelity`].
enum LcsfidStatus lcsfid_single_shot_fidelity(const struct LcsfidDevice *dev,
                                              const double *offsets,
                                              const double *decay_times,
                                              size_t len,
                                              double omega_prime,
                                              double *out);

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len`); returns the full message length, or 0 if there is none.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t lcsfid_last_error_copy(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCSFID_H */
