#include "trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "image.hpp"
#include "tensor_archive.hpp"

namespace lapstyle {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

TrainingConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  TrainingConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_config_override(TrainingConfig& cfg, const std::string& key,
                           const std::string& value) {
  auto as_int = [&](int min_v) {
    int v = std::stoi(value);
    if (v < min_v) throw ConfigError(key + " must be >= " + std::to_string(min_v));
    return v;
  };
  if (key == "stage") {
    if (value != "draft" && value != "revision") {
      throw ConfigError("stage must be 'draft' or 'revision', got '" + value + "'");
    }
    cfg.stage = value;
  } else if (key == "level") cfg.level = as_int(1);
  else if (key == "content_dir") cfg.content_dir = value;
  else if (key == "style_image") cfg.style_image = value;
  else if (key == "extractor") cfg.extractor = value;
  else if (key == "prior_bundle") cfg.prior_bundle = value;
  else if (key == "out") cfg.out = value;
  else if (key == "log_path") cfg.log_path = value;
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "resolution") cfg.resolution = as_int(16);
  else if (key == "iterations") cfg.iterations = as_int(0);
  else if (key == "batch_size") cfg.batch_size = as_int(1);
  else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
  else if (key == "lambda1") cfg.weights.lambda1 = std::stod(value);
  else if (key == "lambda2") cfg.weights.lambda2 = std::stod(value);
  else if (key == "alpha") cfg.weights.alpha = std::stod(value);
  else if (key == "beta") cfg.weights.beta = std::stod(value);
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "checkpoint_every") cfg.checkpoint_every = as_int(1);
  else throw ConfigError("unknown config key: " + key);
}

nlohmann::json config_to_json(const TrainingConfig& cfg) {
  return {{"stage", cfg.stage},
          {"level", cfg.level},
          {"content_dir", cfg.content_dir},
          {"style_image", cfg.style_image},
          {"extractor", cfg.extractor},
          {"resolution", cfg.resolution},
          {"iterations", cfg.iterations},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"lambda1", cfg.weights.lambda1},
          {"lambda2", cfg.weights.lambda2},
          {"alpha", cfg.weights.alpha},
          {"beta", cfg.weights.beta},
          {"seed", cfg.seed},
          {"checkpoint_every", cfg.checkpoint_every}};
}

static void validate_common(const TrainingConfig& cfg) {
  if (cfg.content_dir.empty()) throw ConfigError("content_dir is required");
  if (cfg.style_image.empty()) throw ConfigError("style_image is required");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(cfg.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (cfg.weights.lambda1 < 0 || cfg.weights.lambda2 < 0 || cfg.weights.alpha < 0 ||
      cfg.weights.beta < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

// ---------------------------------------------------------------------------
// Content pipeline

ContentSampler::ContentSampler(const std::string& dir, int resolution, int batch_size,
                               uint64_t seed)
    : resolution_(resolution), batch_size_(batch_size), rng_(seed) {
  if (!fs::is_directory(dir)) throw DataError("content_dir is not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files_.push_back(entry.path().string());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw DataError("content_dir has no files: " + dir);
}

torch::Tensor ContentSampler::next_sample() {
  while (!files_.empty()) {
    if (cursor_ >= order_.size()) {
      order_.resize(files_.size());
      std::iota(order_.begin(), order_.end(), size_t{0});
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    const size_t idx = order_[cursor_++];
    Image img;
    try {
      img = load_image(files_[idx]);
    } catch (const DataError& e) {
      std::cerr << "warning: skipping undecodable content file " << files_[idx] << "\n";
      files_.erase(files_.begin() + static_cast<ptrdiff_t>(idx));
      order_.clear();  // indices shifted; reshuffle survivors
      cursor_ = 0;
      continue;
    }
    const auto h = img.height(), w = img.width();
    const auto short_side = std::min(h, w);
    const auto target_short = std::llround(1.12 * resolution_);
    const double scale = static_cast<double>(target_short) / static_cast<double>(short_side);
    const auto nh = std::max<int64_t>(resolution_, std::llround(scale * h));
    const auto nw = std::max<int64_t>(resolution_, std::llround(scale * w));
    auto resized = resize_bilinear(img.batched(), nh, nw).squeeze(0);
    std::uniform_int_distribution<int64_t> dy(0, nh - resolution_), dx(0, nw - resolution_);
    const auto y = dy(rng_), x = dx(rng_);
    return resized.slice(1, y, y + resolution_).slice(2, x, x + resolution_).contiguous();
  }
  throw DataError("content_dir has no decodable images");
}

torch::Tensor ContentSampler::next_batch() {
  std::vector<torch::Tensor> samples;
  samples.reserve(batch_size_);
  for (int i = 0; i < batch_size_; ++i) samples.push_back(next_sample());
  return torch::stack(samples, 0);
}

// ---------------------------------------------------------------------------
// Loss log

namespace {

class LossLog {
 public:
  explicit LossLog(const std::string& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::trunc);
    if (!out_) throw DataError("cannot open loss log for writing: " + path);
  }
  void record(int step, const std::string& component, double value) {
    if (!std::isfinite(value)) {
      throw DataError("non-finite loss component '" + component + "' at step " +
                      std::to_string(step));
    }
    if (!out_.is_open()) return;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "step=%d component=%s value=%.10g\n", step,
                  component.c_str(), value);
    out_ << buf;
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::string default_log_path(const TrainingConfig& cfg) {
  if (!cfg.log_path.empty()) return cfg.log_path;
  if (!cfg.out.empty()) return cfg.out + ".log";
  return {};
}

class Checkpointer {
 public:
  Checkpointer(const TrainingConfig& cfg, std::string stage_name)
      : every_(cfg.checkpoint_every), stage_(std::move(stage_name)) {
    if (!cfg.checkpoint_dir.empty()) dir_ = cfg.checkpoint_dir;
    else if (!cfg.out.empty()) dir_ = fs::path(cfg.out).parent_path().string();
    if (dir_.empty() && cfg.out.empty()) enabled_ = false;
    if (dir_.empty()) dir_ = ".";
  }
  void maybe_save(int step, const ModelBundle& bundle) {
    if (!enabled_ || step == 0 || step % every_ != 0) return;
    fs::create_directories(dir_);
    char name[128];
    std::snprintf(name, sizeof(name), "checkpoint_%s_%06d.lsb", stage_.c_str(), step);
    const std::string path = (fs::path(dir_) / name).string();
    save_bundle(bundle, path);
    written_.push_back(path);
    while (written_.size() > 3) {  // keep last 3 plus the final bundle
      std::error_code ec;
      fs::remove(written_.front(), ec);
      written_.erase(written_.begin());
    }
  }

 private:
  bool enabled_ = true;
  int every_;
  std::string stage_;
  std::string dir_;
  std::vector<std::string> written_;
};

torch::Tensor load_style_at(const std::string& path, int resolution) {
  auto img = load_image(path);
  return resize_bilinear(img.batched(), resolution, resolution);
}

}  // namespace

std::vector<LossLogEntry> read_loss_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open loss log: " + path);
  std::vector<LossLogEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    LossLogEntry e;
    char name[64];
    if (std::sscanf(line.c_str(), "step=%d component=%63s value=%lf", &e.step, name,
                    &e.value) == 3) {
      e.component = name;
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Stage 1: drafting

ModelBundle train_drafting(const TrainingConfig& cfg) {
  if (cfg.stage != "draft") throw ConfigError("train_drafting requires stage = draft");
  validate_common(cfg);
  if (cfg.resolution % 16 != 0) {
    throw ConfigError("draft resolution must be divisible by 16, got " +
                      std::to_string(cfg.resolution));
  }
  if (cfg.extractor.empty()) throw ConfigError("extractor is required");

  torch::manual_seed(cfg.seed);
  auto extractor = FeatureExtractor::load(cfg.extractor);
  const uint32_t extractor_crc = extractor.checksum();

  auto style = load_style_at(cfg.style_image, cfg.resolution);
  auto style_ctx = make_style_context(extractor, style);
  LayerSchedule sched;
  auto style_feats = make_style_features(extractor, style, sched);

  DraftingDecoder decoder;  // seeded init: manual_seed above
  torch::optim::Adam opt(decoder->parameters(),
                         torch::optim::AdamOptions(cfg.learning_rate).betas({0.9, 0.999}));

  ContentSampler sampler(cfg.content_dir, cfg.resolution, cfg.batch_size, cfg.seed);
  std::mt19937_64 loss_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  LossLog log(default_log_path(cfg));

  ModelBundle bundle;
  bundle.stack.extractor = extractor;
  bundle.stack.decoder = decoder;
  bundle.stack.style = style_ctx;
  bundle.meta["draft_resolution"] = cfg.resolution;
  bundle.meta["revision_resolutions"] = std::vector<int>{};
  bundle.meta["style_image_crc32"] = crc32_of_file(cfg.style_image);
  bundle.meta["optimizer"] = {{"type", "adam"}, {"betas", {0.9, 0.999}}, {"weight_decay", 0.0}};
  bundle.meta["config"] = config_to_json(cfg);

  Checkpointer checkpoints(cfg, "draft");
  for (int step = 1; step <= cfg.iterations; ++step) {
    auto batch = sampler.next_batch();

    FeatureSet content_feats;
    {
      torch::NoGradGuard ng;
      content_feats = extractor.extract(batch, sched.union_tags());
    }
    auto output = decode_with_style(decoder, content_feats, style_ctx);
    auto terms = compute_base_losses(extractor, content_feats, style_feats, output, sched,
                                     loss_rng);
    auto total = terms.weighted_total(cfg.weights);

    log.record(step, "perceptual", terms.perceptual.item<double>());
    log.record(step, "self_similarity", terms.self_similarity.item<double>());
    log.record(step, "mean_variance", terms.mean_variance.item<double>());
    log.record(step, "remd", terms.remd.item<double>());
    log.record(step, "total", total.item<double>());

    opt.zero_grad();
    total.backward();
    opt.step();

    checkpoints.maybe_save(step, bundle);
  }

  if (extractor.checksum() != extractor_crc) {
    throw Error(ErrorClass::kInternal, "extractor parameters changed during training");
  }
  if (!cfg.out.empty()) save_bundle(bundle, cfg.out);
  return bundle;
}

// ---------------------------------------------------------------------------
// Stage 2+: revision

ModelBundle train_revision(const TrainingConfig& cfg, const ModelBundle& prior, int level) {
  if (cfg.stage != "revision") throw ConfigError("train_revision requires stage = revision");
  validate_common(cfg);
  if (level < 1) throw ConfigError("revision level must be >= 1");
  if (static_cast<int>(prior.stack.revisions.size()) < level - 1) {
    throw ConfigError("prior bundle has " + std::to_string(prior.stack.revisions.size()) +
                      " revision level(s); training level " + std::to_string(level) +
                      " needs all earlier levels");
  }
  const int expected_res = prior.draft_resolution() << level;
  if (cfg.resolution != expected_res) {
    throw ConfigError("revision level " + std::to_string(level) + " trains at " +
                      std::to_string(expected_res) + " px for draft resolution " +
                      std::to_string(prior.draft_resolution()) + ", config says " +
                      std::to_string(cfg.resolution));
  }
  const uint32_t style_crc = crc32_of_file(cfg.style_image);
  if (prior.meta.contains("style_image_crc32") &&
      prior.meta["style_image_crc32"].get<uint32_t>() != style_crc) {
    throw ConfigError("style_image differs from the one the prior bundle was trained on");
  }

  torch::manual_seed(cfg.seed + static_cast<uint64_t>(level));
  const auto& extractor = prior.stack.extractor;
  const uint32_t extractor_crc = extractor.checksum();

  auto style = load_style_at(cfg.style_image, cfg.resolution);
  LayerSchedule sched;
  auto style_feats = make_style_features(extractor, style, sched);

  RevisionNet revision;
  PatchDiscriminator disc;
  const bool adversarial = cfg.weights.beta > 0.0;
  torch::optim::Adam opt_g(revision->parameters(),
                           torch::optim::AdamOptions(cfg.learning_rate).betas({0.9, 0.999}));
  torch::optim::Adam opt_d(disc->parameters(),
                           torch::optim::AdamOptions(cfg.learning_rate).betas({0.9, 0.999}));

  ContentSampler sampler(cfg.content_dir, cfg.resolution, cfg.batch_size, cfg.seed);
  std::mt19937_64 loss_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  LossLog log(default_log_path(cfg));

  ModelBundle bundle;
  bundle.stack = prior.stack;
  if (static_cast<int>(bundle.stack.revisions.size()) >= level) {
    bundle.stack.revisions.resize(level - 1);  // retraining a level replaces it
  }
  bundle.stack.revisions.push_back(revision);
  bundle.discriminator = disc;
  bundle.meta = prior.meta;
  auto resolutions = bundle.meta.value("revision_resolutions", std::vector<int>{});
  resolutions.resize(static_cast<size_t>(level - 1));
  resolutions.push_back(cfg.resolution);
  bundle.meta["revision_resolutions"] = resolutions;
  bundle.meta["config"] = config_to_json(cfg);

  Checkpointer checkpoints(cfg, "revision" + std::to_string(level));
  for (int step = 1; step <= cfg.iterations; ++step) {
    auto batch = sampler.next_batch();

    // frozen pipeline up to the previous level
    torch::Tensor draft_up, content_residual;
    FeatureSet content_feats;
    {
      torch::NoGradGuard ng;
      auto pyr = decompose(batch, level + 1);
      auto decoder = bundle.stack.decoder;
      auto cur = draft_forward(extractor, decoder, pyr.base, bundle.stack.style);
      for (int j = 0; j + 1 < level; ++j) {
        auto up = upsample(cur, 2);
        cur = up + bundle.stack.revisions[j]->forward(pyr.residuals[j], up);
      }
      draft_up = upsample(cur, 2);
      content_residual = pyr.residuals[level - 1];
      content_feats = extractor.extract(batch, sched.union_tags());
    }

    auto r_cs = revision->forward(content_residual, draft_up);
    auto stylized = draft_up + r_cs;

    double d_value = 0.0;
    if (adversarial) {
      auto real_scores = disc->forward(style);
      auto fake_scores = disc->forward(stylized.detach());
      auto d_loss = adversarial_losses(real_scores, fake_scores).discriminator;
      opt_d.zero_grad();
      d_loss.backward();
      opt_d.step();
      d_value = d_loss.item<double>();
    }

    auto terms = compute_base_losses(extractor, content_feats, style_feats, stylized, sched,
                                     loss_rng);
    auto total = terms.weighted_total(cfg.weights);
    double g_value = 0.0;
    if (adversarial) {
      auto g_loss = (disc->forward(stylized) - 1.0).pow(2).mean();
      total = total + cfg.weights.beta * g_loss;
      g_value = g_loss.item<double>();
    }

    log.record(step, "perceptual", terms.perceptual.item<double>());
    log.record(step, "self_similarity", terms.self_similarity.item<double>());
    log.record(step, "mean_variance", terms.mean_variance.item<double>());
    log.record(step, "remd", terms.remd.item<double>());
    if (adversarial) {
      log.record(step, "adversarial_g", g_value);
      log.record(step, "adversarial_d", d_value);
    }
    log.record(step, "total", total.item<double>());

    opt_g.zero_grad();
    total.backward();
    opt_g.step();

    checkpoints.maybe_save(step, bundle);
  }

  if (extractor.checksum() != extractor_crc) {
    throw Error(ErrorClass::kInternal, "extractor parameters changed during training");
  }
  if (!cfg.out.empty()) save_bundle(bundle, cfg.out);
  return bundle;
}

}  // namespace lapstyle
