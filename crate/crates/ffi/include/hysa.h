#ifndef HYSA_H
#define HYSA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HysaStatus {
  HYSA_STATUS_OK = 0,
  HYSA_STATUS_NULL_POINTER = 1,
  HYSA_STATUS_INVALID_UTF8 = 2,
  HYSA_STATUS_PARSE = 3,
  HYSA_STATUS_INVALID_ARGUMENT = 4,
  HYSA_STATUS_SIMULATION = 5,
  HYSA_STATUS_PANIC = 6,
} HysaStatus;

typedef struct HysaConfig HysaConfig;

typedef struct HysaNetworkTrace HysaNetworkTrace;

typedef struct HysaPredictor HysaPredictor;

typedef struct HysaRunResult HysaRunResult;

typedef struct HysaVideoTrace HysaVideoTrace;

typedef struct HysaQoeWeights {
  double quality;
  double rebuffer;
  double latency;
  double skip;
  double switch_;
  double drop_latency;
} HysaQoeWeights;

typedef struct HysaQoe {
  double quality;
  double rebuf;
  double latency;
  double skip;
  double switch_;
  double overall;
} HysaQoe;

typedef struct HysaRunStats {
  size_t frames;
  size_t segments;
  size_t stalls;
  size_t skips;
  double played;
  double skipped;
  double final_buffer;
  double rebuffer_time;
  double wall_time;
  double pred_error;
} HysaRunStats;

typedef struct HysaFrameOutcome {
  double coding_bitrate;
  double rebuffer_time;
  double latency;
  double skipped_length;
  double prev_coding_bitrate;
} HysaFrameOutcome;

typedef struct HysaPlaybackDecision {
  // 0 or 1.
  uint32_t target_buffer;
  double rate;
  double resume_threshold;
} HysaPlaybackDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the same
// thread.
const char *hysa_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hysa_version(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void hysa_string_free(char *s);

// # Safety
// `out` must be valid for a pointer write.
enum HysaStatus hysa_config_default(struct HysaConfig **out);

// Parses a `key = value` configuration.
//
// # Safety
// `text` must be a NUL-terminated string; `out` valid for a pointer write.
enum HysaStatus hysa_config_parse(const char *text, struct HysaConfig **out);

// Copies the QoE weights of `config` into `out`.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_config_weights(const struct HysaConfig *config, struct HysaQoeWeights *out);

// # Safety
// `config` must be NULL or a handle from this library, not yet freed.
void hysa_config_free(struct HysaConfig *config);

// Parses a video trace CSV using the frame timing and ladder of `config`.
//
// # Safety
// `csv` must be a NUL-terminated string; other pointers valid.
enum HysaStatus hysa_video_trace_parse(const char *csv,
                                       const struct HysaConfig *config,
                                       struct HysaVideoTrace **out);

// # Safety
// Pointers must be valid.
enum HysaStatus hysa_video_trace_segment_count(const struct HysaVideoTrace *trace, size_t *out);

// Actual bitrate of GOP `segment` at `level`.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_video_trace_actual_bitrate(const struct HysaVideoTrace *trace,
                                                size_t segment,
                                                size_t level,
                                                double *out);

// # Safety
// `trace` must be NULL or a handle from this library, not yet freed.
void hysa_video_trace_free(struct HysaVideoTrace *trace);

// # Safety
// `csv` must be a NUL-terminated string; `out` valid for a pointer write.
enum HysaStatus hysa_network_trace_parse(const char *csv, struct HysaNetworkTrace **out);

// Constant-bandwidth network trace.
//
// # Safety
// `out` must be valid for a pointer write.
enum HysaStatus hysa_network_trace_constant(double bandwidth_bps, struct HysaNetworkTrace **out);

// # Safety
// `trace` must be NULL or a handle from this library, not yet freed.
void hysa_network_trace_free(struct HysaNetworkTrace *trace);

// Runs `scheme` (for example `"hysa"`, `"hysa-n"`, `"fixed:0"`); NULL uses
// the scheme named in `config`.
//
// # Safety
// Handles must be valid; `scheme` NULL or NUL-terminated; `out` valid.
enum HysaStatus hysa_simulate(const struct HysaVideoTrace *video,
                              const struct HysaNetworkTrace *network,
                              const struct HysaConfig *config,
                              const char *scheme,
                              struct HysaRunResult **out);

// # Safety
// Pointers must be valid.
enum HysaStatus hysa_run_result_qoe(const struct HysaRunResult *result, struct HysaQoe *out);

// # Safety
// Pointers must be valid.
enum HysaStatus hysa_run_result_stats(const struct HysaRunResult *result, struct HysaRunStats *out);

// Per-frame log as CSV; free with [`hysa_string_free`].
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_run_result_frames_csv(const struct HysaRunResult *result, char **out);

// Per-segment log as CSV; free with [`hysa_string_free`].
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_run_result_segments_csv(const struct HysaRunResult *result, char **out);

// # Safety
// `result` must be NULL or a handle from this library, not yet freed.
void hysa_run_result_free(struct HysaRunResult *result);

// KAMA bitrate predictor over the ladder and parameters of `config`.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_predictor_new(const struct HysaConfig *config, struct HysaPredictor **out);

// Feeds the actual bitrate observed for a segment downloaded at `level`.
//
// # Safety
// `predictor` must be valid.
enum HysaStatus hysa_predictor_observe(struct HysaPredictor *predictor,
                                       size_t level,
                                       double observed_bps);

// Writes up to `len` per-level predictions into `out` and the level count
// into `written`.
//
// # Safety
// `out` must hold `len` doubles; other pointers valid.
enum HysaStatus hysa_predictor_predictions(const struct HysaPredictor *predictor,
                                           double *out,
                                           size_t len,
                                           size_t *written);

// # Safety
// `predictor` must be NULL or a handle from this library, not yet freed.
void hysa_predictor_free(struct HysaPredictor *predictor);

// Per-frame QoE breakdown.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_score_frame(const struct HysaQoeWeights *weights,
                                 const struct HysaFrameOutcome *outcome,
                                 double frame_duration,
                                 struct HysaQoe *out);

// Latency above which frames are skipped for a segment at `coding_bitrate`.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_skip_threshold(double coding_bitrate,
                                    double frame_duration,
                                    const struct HysaQoeWeights *weights,
                                    double lambda,
                                    double *out);

// Target-buffer choice and playback rate for the current buffer level.
//
// # Safety
// Pointers must be valid.
enum HysaStatus hysa_decide_playback(const struct HysaConfig *config,
                                     double buffer,
                                     struct HysaPlaybackDecision *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYSA_H */
