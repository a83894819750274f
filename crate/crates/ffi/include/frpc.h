#ifndef FRPC_H
#define FRPC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FrpcStatus {
  FRPC_STATUS_OK = 0,
  FRPC_STATUS_NULL_POINTER = 1,
  FRPC_STATUS_INVALID_UTF8 = 2,
  FRPC_STATUS_IO = 3,
  FRPC_STATUS_FORMAT = 4,
  FRPC_STATUS_VALIDATION = 5,
  FRPC_STATUS_INVALID_ARGUMENT = 6,
  FRPC_STATUS_ANALYSIS = 7,
  FRPC_STATUS_PANIC = 8,
} FrpcStatus;

// A loaded or generated EpochSet.
typedef struct FrpcEpochSet FrpcEpochSet;

// Result of analyzing one subject.
typedef struct FrpcReport FrpcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next frpc call on the same thread.
const char *frpc_last_error(void);

// Library version, a static string.
const char *frpc_version(void);

// Read an EpochSet from a manifest path or its directory.
//
// # Safety
// `path` must be a nul-terminated string; `out` a valid pointer.
enum FrpcStatus frpc_epochset_read(const char *path, struct FrpcEpochSet **out);

// Write `set` into directory `dir`.
//
// # Safety
// `set` must come from this library; `dir` must be a nul-terminated string.
enum FrpcStatus frpc_epochset_write(const struct FrpcEpochSet *set, const char *dir);

// Dimensions and sampling rate. Any output pointer may be null.
//
// # Safety
// `set` must come from this library; non-null outputs must be valid.
enum FrpcStatus frpc_epochset_dims(const struct FrpcEpochSet *set,
                                   size_t *n_trials,
                                   size_t *n_channels,
                                   size_t *n_samples,
                                   double *fs_hz);

// Copy one trial/channel signal into `buf` (`len` must be at least `n_samples`).
//
// # Safety
// `set` must come from this library; `buf` must hold `len` doubles.
enum FrpcStatus frpc_epochset_signal(const struct FrpcEpochSet *set,
                                     size_t trial,
                                     size_t channel,
                                     double *buf,
                                     size_t len);

// # Safety
// `set` must come from this library (or be null) and not be used afterwards.
void frpc_epochset_free(struct FrpcEpochSet *set);

// Two-class synthetic subject ("left"/"right", channels C3, Cz, C4, 250 Hz)
// with "left" band power on C3 in 8-12 Hz multiplied by `multiplier`.
//
// # Safety
// `out` must be a valid pointer.
enum FrpcStatus frpc_synth_oracle(uint64_t seed,
                                  size_t trials_per_class,
                                  double multiplier,
                                  struct FrpcEpochSet **out);

// Full pipeline on a two-class set. `config_toml` may be null for defaults.
//
// # Safety
// `set` must come from this library; `config_toml` null or a
// nul-terminated string; `out` a valid pointer.
enum FrpcStatus frpc_analyze(const struct FrpcEpochSet *set,
                             const char *config_toml,
                             uint64_t seed,
                             struct FrpcReport **out);

// Best number of bands and its mean accuracy (%). Either output may be null.
//
// # Safety
// `report` must come from this library; non-null outputs must be valid.
enum FrpcStatus frpc_report_best(const struct FrpcReport *report, size_t *best_n, double *accuracy);

// Mean and standard deviation (%) for `n` bands.
//
// # Safety
// `report` must come from this library; outputs must be valid.
enum FrpcStatus frpc_report_accuracy(const struct FrpcReport *report,
                                     size_t n,
                                     double *mean,
                                     double *std);

// Selected channel name, owned by the report.
//
// # Safety
// `report` must come from this library (or be null, giving null).
const char *frpc_report_channel(const struct FrpcReport *report);

// The whole report as JSON; free with [`frpc_string_free`].
//
// # Safety
// `report` must come from this library; `out` a valid pointer.
enum FrpcStatus frpc_report_json(const struct FrpcReport *report, char **out);

// # Safety
// `report` must come from this library (or be null) and not be used afterwards.
void frpc_report_free(struct FrpcReport *report);

// # Safety
// `s` must come from this library (or be null).
void frpc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRPC_H */
