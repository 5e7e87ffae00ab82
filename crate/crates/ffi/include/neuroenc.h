#ifndef NEUROENC_H
#define NEUROENC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum NeStatus {
  NE_STATUS_OK = 0,
  NE_STATUS_NULL_POINTER = 1,
  NE_STATUS_INVALID_ARGUMENT = 2,
  NE_STATUS_PARSE_ERROR = 3,
  NE_STATUS_INVALID_CONFIG = 4,
  NE_STATUS_NON_SPIKING = 5,
  NE_STATUS_OUT_OF_RANGE = 6,
  NE_STATUS_CORRUPT_WINDOW = 7,
  NE_STATUS_PANIC = 99,
} NeStatus;

typedef enum NeMode {
  NE_MODE_ANALYTIC = 0,
  NE_MODE_SIMULATED = 1,
} NeMode;

// Device parameters, branches and power table.
typedef struct NeConfig NeConfig;

// An encoded image: one spike train per pixel window.
typedef struct NeEncoding NeEncoding;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *ne_last_error(void);

// Default configuration. Never NULL.
struct NeConfig *ne_config_default(void);

// Parse `key = value` configuration text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum NeStatus ne_config_parse(const char *text, struct NeConfig **out);

// # Safety
// `cfg` must be NULL or a handle from this library not yet freed.
void ne_config_free(struct NeConfig *cfg);

// `NeStatus::Ok` when every pixel spikes on every branch inside one window.
//
// # Safety
// `cfg` must be a live handle.
enum NeStatus ne_config_validate(const struct NeConfig *cfg);

// Number of branches, or 0 for a NULL handle.
//
// # Safety
// `cfg` must be NULL or a live handle.
size_t ne_config_branch_count(const struct NeConfig *cfg);

// Enable period in seconds, or 0 for a NULL handle.
//
// # Safety
// `cfg` must be NULL or a live handle.
double ne_config_t_samp(const struct NeConfig *cfg);

// Excitatory current (amperes) of `branch` at `pixel`.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
enum NeStatus ne_excitatory_current(const struct NeConfig *cfg,
                                    uint8_t pixel,
                                    size_t branch,
                                    double *out);

// Analytic inter-spike interval `D_index` (seconds) at `pixel`.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
enum NeStatus ne_interval_analytic(const struct NeConfig *cfg,
                                   uint8_t pixel,
                                   size_t index,
                                   double *out);

// Simulated time to first spike (seconds) of `branch` at `pixel`, default step.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
enum NeStatus ne_simulate_branch(const struct NeConfig *cfg,
                                 uint8_t pixel,
                                 size_t branch,
                                 double *out);

// Decode interval `D_index` (seconds) back to a pixel.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
enum NeStatus ne_decode_interval(const struct NeConfig *cfg,
                                 double interval,
                                 size_t index,
                                 uint8_t *out);

// Single-neuron power in nanowatts at `pixel`.
//
// # Safety
// `cfg` must be a live handle and `out` writable.
enum NeStatus ne_power_nw(const struct NeConfig *cfg, uint8_t pixel, double *out);

// Encode a `rows x cols` row-major 8-bit image.
//
// # Safety
// `pixels` must point to `rows * cols` readable bytes (may be NULL when that
// product is 0); `cfg` must be a live handle and `out` writable.
enum NeStatus ne_encode(const struct NeConfig *cfg,
                        const uint8_t *pixels,
                        size_t rows,
                        size_t cols,
                        enum NeMode mode,
                        struct NeEncoding **out);

// # Safety
// `enc` must be NULL or a handle from this library not yet freed.
void ne_encoding_free(struct NeEncoding *enc);

// Number of pixel windows, or 0 for a NULL handle.
//
// # Safety
// `enc` must be NULL or a live handle.
size_t ne_encoding_window_count(const struct NeEncoding *enc);

// Total encoding time `rows * cols * t_samp` in seconds, or 0 for NULL.
//
// # Safety
// `enc` must be NULL or a live handle.
double ne_encoding_duration(const struct NeEncoding *enc);

// Number of branches that failed to spike across all windows.
//
// # Safety
// `enc` must be NULL or a live handle.
size_t ne_encoding_warning_count(const struct NeEncoding *enc);

// Number of spikes in window `window`.
//
// # Safety
// `enc` must be a live handle and `out` writable.
enum NeStatus ne_encoding_event_count(const struct NeEncoding *enc, size_t window, size_t *out);

// Spike `k` of window `window`: branch id and absolute time in seconds.
//
// # Safety
// `enc` must be a live handle; `branch_id` and `time` writable.
enum NeStatus ne_encoding_event(const struct NeEncoding *enc,
                                size_t window,
                                size_t k,
                                size_t *branch_id,
                                double *time);

// Decode into `pixels`, which must hold exactly one byte per window.
//
// # Safety
// `cfg` and `enc` must be live handles; `pixels` must point to `len`
// writable bytes.
enum NeStatus ne_decode(const struct NeConfig *cfg,
                        const struct NeEncoding *enc,
                        uint8_t *pixels,
                        size_t len);

// Serialize an encoding as a spike-table CSV string. Free with [`ne_string_free`].
//
// # Safety
// `enc` must be a live handle and `out` writable.
enum NeStatus ne_encoding_to_csv(const struct NeEncoding *enc, char **out);

// Parse a spike-table CSV string.
//
// # Safety
// `csv` must be NUL-terminated and `out` writable.
enum NeStatus ne_encoding_from_csv(const char *csv, struct NeEncoding **out);

// # Safety
// `s` must be NULL or a string returned by this library not yet freed.
void ne_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROENC_H */
