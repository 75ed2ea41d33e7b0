/* lapstyle: feed-forward artistic style transfer over a Laplacian pyramid.
 *
 * C API for the shared library. All functions return ls_status; on failure
 * ls_last_error() holds a thread-local description of what went wrong.
 * Handles are opaque and single-owner; they are not thread-safe for
 * concurrent mutation but concurrent stylize calls on one ls_bundle are fine.
 */
#ifndef LAPSTYLE_LAPSTYLE_H
#define LAPSTYLE_LAPSTYLE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as CLI exit codes: 0 ok, 1 usage (bad arguments,
 * configuration, dimensions), 2 data (unreadable inputs, version
 * incompatibility, non-finite losses), 3 integrity (corrupted archives),
 * 4 internal. */
typedef enum ls_status {
  LS_OK = 0,
  LS_ERROR_USAGE = 1,
  LS_ERROR_DATA = 2,
  LS_ERROR_INTEGRITY = 3,
  LS_ERROR_INTERNAL = 4
} ls_status;

typedef struct ls_bundle ls_bundle;

const char* ls_version(void);

/* Message for the most recent failing call on this thread; empty if none. */
const char* ls_last_error(void);

/* ------------------------------------------------------------------ */
/* Model bundles                                                       */

ls_status ls_bundle_open(const char* path, ls_bundle** out_bundle);
void ls_bundle_close(ls_bundle* bundle);
int32_t ls_bundle_revision_levels(const ls_bundle* bundle);
int32_t ls_bundle_draft_resolution(const ls_bundle* bundle);

/* ------------------------------------------------------------------ */
/* Inference                                                           */

#define LS_MAX_LEVELS 8

typedef struct ls_stylize_report {
  int32_t levels;
  int64_t content_height, content_width;
  /* input was reflection-padded to this size when it differs from content */
  int64_t padded_height, padded_width;
  double draft_seconds;
  double revision_seconds[LS_MAX_LEVELS];
} ls_stylize_report;

/* levels: number of revision levels to apply, or -1 for all in the bundle. */
ls_status ls_stylize_file(ls_bundle* bundle, const char* content_path, const char* out_path,
                          int32_t levels, ls_stylize_report* report /* nullable */);

typedef struct ls_video_report {
  int32_t frames;
  double fps;
  double total_seconds;
} ls_video_report;

/* Frame-by-frame, stateless; frame rate and resolution preserved. */
ls_status ls_stylize_video(ls_bundle* bundle, const char* in_path, const char* out_path,
                           int32_t levels, ls_video_report* report /* nullable */);

typedef struct ls_benchmark_report {
  int32_t resolution, levels, iterations, warmup;
  /* seconds per image; timed region covers pyramid + networks only */
  double mean_s, median_s, p95_s, images_per_second;
  char device[160];
} ls_benchmark_report;

ls_status ls_benchmark(ls_bundle* bundle, int32_t resolution, int32_t iterations,
                       int32_t warmup, ls_benchmark_report* report);

/* ------------------------------------------------------------------ */
/* Training                                                            */

/* Runs the stage named in the config file ("draft" or "revision"); overrides
 * are "key=value" strings applied after the file. Writes the bundle and loss
 * log at the configured paths. */
ls_status ls_train(const char* config_path, const char* const* overrides,
                   int32_t n_overrides);

/* Seeded randomly-initialized extractor weights archive (He init). */
ls_status ls_make_extractor(const char* out_path, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* LAPSTYLE_LAPSTYLE_H */
