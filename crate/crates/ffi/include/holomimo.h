#ifndef HOLOMIMO_H
#define HOLOMIMO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum HmStatus {
  HM_STATUS_OK = 0,
  HM_STATUS_INVALID_ARGUMENT = 1,
  HM_STATUS_SINGULARITY = 2,
  HM_STATUS_DIMENSION_MISMATCH = 3,
  HM_STATUS_NUMERICAL = 4,
  HM_STATUS_IO = 5,
  HM_STATUS_NULL_POINTER = 6,
  HM_STATUS_BUFFER_TOO_SMALL = 7,
  HM_STATUS_PANIC = 8,
} HmStatus;

// Precoding schemes, numbered as in the CSV scheme order.
typedef enum HmScheme {
  HM_SCHEME_SVD_WF = 0,
  HM_SCHEME_SVD_EPA = 1,
  HM_SCHEME_OAM_UNFOCUSED = 2,
  HM_SCHEME_OAM_FOCUSED = 3,
  HM_SCHEME_WALSH_RADIAL = 4,
  HM_SCHEME_WALSH_ANGULAR = 5,
  HM_SCHEME_WALSH_POLAR = 6,
} HmScheme;

// Sampled disk aperture.
typedef struct HmAperture HmAperture;

// Channel matrix between two apertures.
typedef struct HmChannel HmChannel;

// Sweep configuration.
typedef struct HmSweepConfig HmSweepConfig;

// Completed sweep.
typedef struct HmSweepResult HmSweepResult;

// One row of a sweep result.
typedef struct HmRecord {
  double d_over_dr;
  double d_wavelengths;
  enum HmScheme scheme;
  double capacity_bits;
} HmRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hm_version(void);

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length, or 0
// when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hm_last_error_message(char *buf, size_t len);

// Green's function between two points given as `[x, y, z]` in wavelengths.
//
// # Safety
// `rx` and `tx` must point to 3 doubles; `re`, `im` must be writable.
enum HmStatus hm_green(const double *rx, const double *tx, double *re, double *im);

// Samples a disk of `radius` wavelengths at `pitch`, in the plane `z`.
//
// # Safety
// `out_aperture` must be writable; the handle is released with
// [`hm_aperture_free`].
enum HmStatus hm_aperture_new(double radius,
                              double pitch,
                              double z,
                              struct HmAperture **out_aperture);

// # Safety
// `aperture` must be null or a handle from [`hm_aperture_new`].
void hm_aperture_free(struct HmAperture *aperture);

// Number of samples; 0 for a null handle.
//
// # Safety
// `aperture` must be null or a live handle.
size_t hm_aperture_point_count(const struct HmAperture *aperture);

// Copies sample coordinates (wavelengths) into `xs` / `ys`, each of
// capacity `len`.
//
// # Safety
// `xs` and `ys` must point to `len` writable doubles.
enum HmStatus hm_aperture_points(const struct HmAperture *aperture,
                                 double *xs,
                                 double *ys,
                                 size_t len);

// Channel from `tx` to `rx`; the apertures must lie in different planes.
//
// # Safety
// Handles must be live; `out_channel` writable.
enum HmStatus hm_channel_new(const struct HmAperture *tx,
                             const struct HmAperture *rx,
                             struct HmChannel **out_channel);

// # Safety
// `channel` must be null or a handle from [`hm_channel_new`].
void hm_channel_free(struct HmChannel *channel);

// # Safety
// `channel` must be live; `rows`, `cols` writable.
enum HmStatus hm_channel_dims(const struct HmChannel *channel, size_t *rows, size_t *cols);

// Copies the matrix in row-major order into split real/imaginary buffers
// of capacity `len` (at least rows × cols).
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum HmStatus hm_channel_entries(const struct HmChannel *channel,
                                 double *re,
                                 double *im,
                                 size_t len);

// Singular values in non-increasing order; `written` receives
// min(rows, cols).
//
// # Safety
// `values` must point to `len` writable doubles; `written` writable.
enum HmStatus hm_channel_singular_values(const struct HmChannel *channel,
                                         double *values,
                                         size_t len,
                                         size_t *written);

// Capacity (bit/s/Hz) of one scheme on `channel`, with `tx` the aperture
// the channel was built from. Uses the distance-compensated link budget at
// `snr_db`; `n_modes` is ignored for `SvdWf`.
//
// # Safety
// Handles must be live; `capacity_bits` writable.
enum HmStatus hm_scheme_capacity(const struct HmChannel *channel,
                                 const struct HmAperture *tx,
                                 enum HmScheme scheme,
                                 size_t n_modes,
                                 double snr_db,
                                 double *capacity_bits);

// Water-filling of a unit-or-smaller `budget` over `len` gains; writes
// `len` weights.
//
// # Safety
// `gains` must point to `len` doubles, `weights` to `len` writable doubles.
enum HmStatus hm_waterfill(const double *gains, size_t len, double budget, double *weights);

// Default (reference) sweep configuration.
//
// # Safety
// `out_config` must be writable.
enum HmStatus hm_sweep_config_default(struct HmSweepConfig **out_config);

// Parses a flat JSON configuration; absent fields take default values.
//
// # Safety
// `json` must be a NUL-terminated string; `out_config` writable.
enum HmStatus hm_sweep_config_from_json(const char *json, struct HmSweepConfig **out_config);

// # Safety
// `config` must be null or a config handle.
void hm_sweep_config_free(struct HmSweepConfig *config);

// Runs the sweep.
//
// # Safety
// `config` must be live; `out_result` writable.
enum HmStatus hm_sweep_run(const struct HmSweepConfig *config, struct HmSweepResult **out_result);

// # Safety
// `result` must be null or a result handle.
void hm_sweep_result_free(struct HmSweepResult *result);

// Number of records; 0 for a null handle.
//
// # Safety
// `result` must be null or live.
size_t hm_sweep_result_len(const struct HmSweepResult *result);

// # Safety
// `result` must be live; `record` writable.
enum HmStatus hm_sweep_result_record(const struct HmSweepResult *result,
                                     size_t index,
                                     struct HmRecord *record);

// Writes the result CSV (same format as the CLI) to `path`.
//
// # Safety
// `result` must be live; `path` a NUL-terminated string.
enum HmStatus hm_sweep_result_write_csv(const struct HmSweepResult *result, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOLOMIMO_H */
