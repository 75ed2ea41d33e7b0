#include "lapstyle/lapstyle.h"

#include <cstring>
#include <string>

#include "core/runtime.hpp"
#include "core/trainer.hpp"

using namespace lapstyle;

struct ls_bundle {
  ModelBundle bundle;
};

namespace {

thread_local std::string g_last_error;

ls_status status_from(const Error& e) {
  g_last_error = e.what();
  switch (e.error_class()) {
    case ErrorClass::kUsage: return LS_ERROR_USAGE;
    case ErrorClass::kData: return LS_ERROR_DATA;
    case ErrorClass::kIntegrity: return LS_ERROR_INTEGRITY;
    default: return LS_ERROR_INTERNAL;
  }
}

template <typename Fn>
ls_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LS_OK;
  } catch (const Error& e) {
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LS_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LS_ERROR_INTERNAL;
  }
}

ls_status usage_error(const std::string& msg) {
  g_last_error = msg;
  return LS_ERROR_USAGE;
}

}  // namespace

extern "C" {

const char* ls_version(void) { return "1.0.0"; }

const char* ls_last_error(void) { return g_last_error.c_str(); }

ls_status ls_bundle_open(const char* path, ls_bundle** out_bundle) {
  if (!path || !out_bundle) return usage_error("ls_bundle_open: null argument");
  *out_bundle = nullptr;
  return guarded([&] { *out_bundle = new ls_bundle{load_bundle(path)}; });
}

void ls_bundle_close(ls_bundle* bundle) { delete bundle; }

int32_t ls_bundle_revision_levels(const ls_bundle* bundle) {
  return bundle ? bundle->bundle.stack.level_count() : -1;
}

int32_t ls_bundle_draft_resolution(const ls_bundle* bundle) {
  return bundle ? bundle->bundle.draft_resolution() : -1;
}

ls_status ls_stylize_file(ls_bundle* bundle, const char* content_path, const char* out_path,
                          int32_t levels, ls_stylize_report* report) {
  if (!bundle || !content_path || !out_path) {
    return usage_error("ls_stylize_file: null argument");
  }
  return guarded([&] {
    StylizeReport rep;
    stylize_file(bundle->bundle, content_path, out_path, levels, &rep);
    if (report) {
      std::memset(report, 0, sizeof(*report));
      report->levels = rep.levels;
      report->content_height = rep.content_height;
      report->content_width = rep.content_width;
      report->padded_height = rep.padded_height;
      report->padded_width = rep.padded_width;
      report->draft_seconds = rep.draft_seconds;
      for (size_t i = 0; i < rep.revision_seconds.size() && i < LS_MAX_LEVELS; ++i) {
        report->revision_seconds[i] = rep.revision_seconds[i];
      }
    }
  });
}

ls_status ls_stylize_video(ls_bundle* bundle, const char* in_path, const char* out_path,
                           int32_t levels, ls_video_report* report) {
  if (!bundle || !in_path || !out_path) return usage_error("ls_stylize_video: null argument");
  return guarded([&] {
    VideoReport rep = stylize_video(bundle->bundle, in_path, out_path, levels);
    if (report) {
      report->frames = rep.frames;
      report->fps = rep.fps;
      report->total_seconds = rep.total_seconds;
    }
  });
}

ls_status ls_benchmark(ls_bundle* bundle, int32_t resolution, int32_t iterations,
                       int32_t warmup, ls_benchmark_report* report) {
  if (!bundle || !report) return usage_error("ls_benchmark: null argument");
  return guarded([&] {
    BenchmarkReport rep = run_benchmark(bundle->bundle, resolution, iterations, warmup);
    std::memset(report, 0, sizeof(*report));
    report->resolution = rep.resolution;
    report->levels = rep.levels;
    report->iterations = rep.iterations;
    report->warmup = rep.warmup;
    report->mean_s = rep.mean_s;
    report->median_s = rep.median_s;
    report->p95_s = rep.p95_s;
    report->images_per_second = rep.images_per_second;
    std::strncpy(report->device, rep.device.c_str(), sizeof(report->device) - 1);
  });
}

ls_status ls_train(const char* config_path, const char* const* overrides,
                   int32_t n_overrides) {
  if (!config_path) return usage_error("ls_train: null config path");
  return guarded([&] {
    TrainingConfig cfg = parse_config_file(config_path);
    for (int32_t i = 0; i < n_overrides; ++i) {
      const std::string kv = overrides[i] ? overrides[i] : "";
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
      apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cfg.stage == "draft") {
      train_drafting(cfg);
    } else {
      if (cfg.prior_bundle.empty()) {
        throw ConfigError("revision stage needs prior_bundle");
      }
      ModelBundle prior = load_bundle(cfg.prior_bundle);
      train_revision(cfg, prior, cfg.level);
    }
  });
}

ls_status ls_make_extractor(const char* out_path, uint64_t seed) {
  if (!out_path) return usage_error("ls_make_extractor: null path");
  return guarded([&] { FeatureExtractor::random(seed).save(out_path); });
}

}  // extern "C"
