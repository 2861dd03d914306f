#ifndef WAVESIM_H
#define WAVESIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by all functions.
typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_ARGUMENT = 2,
  WS_STATUS_BUFFER_TOO_SMALL = 3,
  WS_STATUS_SOLVER_ERROR = 4,
  WS_STATUS_PANIC = 5,
} WsStatus;

// Sampled probe histories, one channel per probe.
typedef struct WsField WsField;

// A prepared simulation built from a JSON configuration.
typedef struct WsModel WsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ws_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length including the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ws_last_error_message(char *buf, size_t len);

// Number of BSWI4,3 shape functions per element.
size_t ws_basis_len(void);

// Evaluates the element shape functions at `xi` in [0, 1].
//
// # Safety
// `out` must point to `len` writable doubles.
enum WsStatus ws_basis_eval(double xi, double *out, size_t len);

// Rotational and shear crack flexibilities of a rectangular section.
//
// Lengths in m, moduli in Pa, density in kg/m³; `depth` is the crack depth.
//
// # Safety
// `c_b` and `c_s` must be valid pointers to doubles.
enum WsStatus ws_crack_flexibilities(double youngs_modulus,
                                     double poisson_ratio,
                                     double density,
                                     double width,
                                     double height,
                                     double depth,
                                     double *c_b,
                                     double *c_s);

// Samples a Hanning-windowed toneburst. `written` receives the sample count;
// with a too-small buffer it still receives the count required.
//
// # Safety
// `out` must point to `len` writable doubles and `written` must be valid.
enum WsStatus ws_toneburst(double fc,
                           uint32_t cycles,
                           double dt,
                           double *out,
                           size_t len,
                           size_t *written);

// Builds a model from a JSON configuration in the CLI schema.
//
// # Safety
// `config_json` must be a NUL-terminated string and `model` a valid pointer.
enum WsStatus ws_model_new(const char *config_json, struct WsModel **model);

// Number of degrees of freedom in the assembled model.
//
// # Safety
// `model` must be null or a handle from [`ws_model_new`].
size_t ws_model_dofs(const struct WsModel *model);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle from [`ws_model_new`] not yet freed.
void ws_model_free(struct WsModel *model);

// Runs the model with its configured solver and returns the probe histories.
//
// # Safety
// `model` must be a live handle and `field` a valid pointer.
enum WsStatus ws_model_run(const struct WsModel *model, struct WsField **field);

// Number of probe channels.
//
// # Safety
// `field` must be null or a live handle.
size_t ws_field_channels(const struct WsField *field);

// Samples per channel.
//
// # Safety
// `field` must be null or a live handle.
size_t ws_field_len(const struct WsField *field);

// Sample spacing (s), or 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
double ws_field_dt(const struct WsField *field);

// Copies channel `channel` into `out`.
//
// # Safety
// `field` must be a live handle and `out` must point to `len` writable doubles.
enum WsStatus ws_field_copy(const struct WsField *field, size_t channel, double *out, size_t len);

// Releases a field. Null is ignored.
//
// # Safety
// `field` must be null or a handle from [`ws_model_run`] not yet freed.
void ws_field_free(struct WsField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVESIM_H */
