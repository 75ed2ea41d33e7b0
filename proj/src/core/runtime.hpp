#pragma once

#include <string>

#include "bundle.hpp"

namespace lapstyle {

struct StylizeReport {
  int levels = 0;
  int64_t content_height = 0, content_width = 0;
  int64_t padded_height = 0, padded_width = 0;  // == content when no padding
  double draft_seconds = 0.0;
  std::vector<double> revision_seconds;
  bool padded() const {
    return padded_height != content_height || padded_width != content_width;
  }
};

// Stylize one image tensor (3, H, W). Inputs whose dims are not divisible by
// 2^levels * 16 are reflection-padded to the next valid size and cropped
// back afterwards; the report records the padded size. levels = -1 means all
// levels in the bundle.
Image stylize_image(const ModelBundle& bundle, const Image& content, int levels,
                    StylizeReport* report = nullptr);

void stylize_file(const ModelBundle& bundle, const std::string& content_path,
                  const std::string& out_path, int levels, StylizeReport* report = nullptr);

struct VideoReport {
  int frames = 0;
  double fps = 0.0;
  double total_seconds = 0.0;
};

// Frame-by-frame stylization, no temporal coupling; frame rate and
// resolution are preserved. Decode failures name the frame index.
VideoReport stylize_video(const ModelBundle& bundle, const std::string& in_path,
                          const std::string& out_path, int levels);

struct BenchmarkReport {
  int resolution = 0;
  int levels = 0;
  int iterations = 0;
  int warmup = 0;
  // seconds per image over the timed region (pyramid + networks only)
  double mean_s = 0.0, median_s = 0.0, p95_s = 0.0, images_per_second = 0.0;
  std::string device;
};

// Times stylize_pyramid on fixed random content at `resolution`, after
// `warmup` untimed runs. Image decode/encode is excluded by construction.
BenchmarkReport run_benchmark(const ModelBundle& bundle, int resolution, int iterations,
                              int warmup);

std::string device_description();

// Number of revision levels needed to stylize at `resolution` given the
// bundle's draft resolution; errors if the bundle cannot support it.
int levels_for_resolution(const ModelBundle& bundle, int resolution);

}  // namespace lapstyle
