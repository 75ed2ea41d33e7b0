#include "runtime.hpp"

#include <chrono>
#include <fstream>

#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "image.hpp"

namespace lapstyle {

namespace F = torch::nn::functional;
using clock_type = std::chrono::steady_clock;

static int resolve_levels(const ModelBundle& bundle, int levels) {
  const int available = bundle.stack.level_count();
  if (levels < 0) return available;
  if (levels > available) {
    throw ConfigError("requested " + std::to_string(levels) + " revision level(s), bundle has " +
                      std::to_string(available));
  }
  return levels;
}

Image stylize_image(const ModelBundle& bundle, const Image& content, int levels,
                    StylizeReport* report) {
  torch::NoGradGuard ng;
  const int use_levels = resolve_levels(bundle, levels);
  const int64_t divisor = (int64_t{1} << use_levels) * 16;

  auto x = content.batched();
  const int64_t h = x.size(2), w = x.size(3);
  const int64_t ph = (h + divisor - 1) / divisor * divisor;
  const int64_t pw = (w + divisor - 1) / divisor * divisor;
  if (ph - h >= h || pw - w >= w) {
    throw DimensionError("content " + std::to_string(h) + "x" + std::to_string(w) +
                         " is too small to pad to a multiple of " + std::to_string(divisor) +
                         "; use fewer levels");
  }
  if (ph != h || pw != w) {
    x = F::pad(x, F::PadFuncOptions({0, pw - w, 0, ph - h}).mode(torch::kReflect));
  }

  StageTimings timings;
  auto out = stylize_pyramid(bundle.stack, x, use_levels, &timings);
  out = out.slice(2, 0, h).slice(3, 0, w);

  if (report) {
    report->levels = use_levels;
    report->content_height = h;
    report->content_width = w;
    report->padded_height = ph;
    report->padded_width = pw;
    report->draft_seconds = timings.draft_seconds;
    report->revision_seconds = timings.revision_seconds;
  }
  return Image(out.squeeze(0).clamp(0.0f, 1.0f));
}

void stylize_file(const ModelBundle& bundle, const std::string& content_path,
                  const std::string& out_path, int levels, StylizeReport* report) {
  auto content = load_image(content_path);
  auto stylized = stylize_image(bundle, content, levels, report);
  save_image(stylized, out_path);
}

// ---------------------------------------------------------------------------
// Video

static Image frame_to_image(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8);
  return Image(hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0f).contiguous());
}

static cv::Mat image_to_frame(const Image& img) {
  auto hwc = img.tensor().clamp(0.0f, 1.0f).mul(255.0f).round().to(torch::kUInt8);
  hwc = hwc.permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
  std::memcpy(rgb.data, hwc.data_ptr<uint8_t>(), hwc.numel());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

VideoReport stylize_video(const ModelBundle& bundle, const std::string& in_path,
                          const std::string& out_path, int levels) {
  cv::VideoCapture cap(in_path);
  if (!cap.isOpened()) throw DataError("cannot open video: " + in_path);
  const double fps = cap.get(cv::CAP_PROP_FPS);
  const auto expected_frames = static_cast<int64_t>(cap.get(cv::CAP_PROP_FRAME_COUNT));

  cv::VideoWriter writer;
  auto t0 = clock_type::now();
  int frame_index = 0;
  cv::Mat frame;
  while (true) {
    if (!cap.read(frame) || frame.empty()) {
      if (expected_frames > 0 && frame_index < expected_frames) {
        throw DataError("failed to decode frame " + std::to_string(frame_index) + " of " +
                        in_path);
      }
      break;
    }
    Image stylized = stylize_image(bundle, frame_to_image(frame), levels, nullptr);
    cv::Mat out = image_to_frame(stylized);
    if (!writer.isOpened()) {
      const int fourcc = cv::VideoWriter::fourcc('M', 'J', 'P', 'G');
      writer.open(out_path, fourcc, fps > 0 ? fps : 25.0, out.size());
      if (!writer.isOpened()) throw DataError("cannot open video for writing: " + out_path);
    }
    writer.write(out);
    ++frame_index;
  }
  if (frame_index == 0) throw DataError("video has no decodable frames: " + in_path);
  writer.release();

  VideoReport rep;
  rep.frames = frame_index;
  rep.fps = fps;
  rep.total_seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Benchmark

std::string device_description() {
  std::string model = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(torch::get_num_threads()) + " thread(s), torch " +
         TORCH_VERSION;
}

int levels_for_resolution(const ModelBundle& bundle, int resolution) {
  const int draft_res = bundle.draft_resolution();
  if (draft_res <= 0) throw ConfigError("bundle has no draft resolution in its manifest");
  int levels = 0;
  int r = draft_res;
  while (r < resolution) {
    r *= 2;
    ++levels;
  }
  if (r != resolution) {
    throw ConfigError("resolution " + std::to_string(resolution) +
                      " is not a power-of-two multiple of the draft resolution " +
                      std::to_string(draft_res));
  }
  if (levels > bundle.stack.level_count()) {
    throw ConfigError("resolution " + std::to_string(resolution) + " needs " +
                      std::to_string(levels) + " revision level(s), bundle has " +
                      std::to_string(bundle.stack.level_count()));
  }
  return levels;
}

BenchmarkReport run_benchmark(const ModelBundle& bundle, int resolution, int iterations,
                              int warmup) {
  if (iterations < 0 || warmup < 0) throw ParameterError("iters and warmup must be >= 0");
  const int levels = levels_for_resolution(bundle, resolution);

  torch::NoGradGuard ng;
  torch::manual_seed(0);
  auto content = torch::rand({1, 3, resolution, resolution});

  BenchmarkReport rep;
  rep.resolution = resolution;
  rep.levels = levels;
  rep.iterations = iterations;
  rep.warmup = warmup;
  rep.device = device_description();

  for (int i = 0; i < warmup; ++i) stylize_pyramid(bundle.stack, content, levels);

  std::vector<double> times;
  times.reserve(iterations);
  for (int i = 0; i < iterations; ++i) {
    auto t0 = clock_type::now();
    auto out = stylize_pyramid(bundle.stack, content, levels);
    (void)out;
    times.push_back(std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  if (!times.empty()) {
    std::sort(times.begin(), times.end());
    double sum = 0.0;
    for (double t : times) sum += t;
    rep.mean_s = sum / static_cast<double>(times.size());
    rep.median_s = times[times.size() / 2];
    rep.p95_s = times[std::min(times.size() - 1,
                               static_cast<size_t>(std::ceil(0.95 * times.size())) - 1)];
    rep.images_per_second = 1.0 / rep.mean_s;
  }
  return rep;
}

}  // namespace lapstyle
