#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "bundle.hpp"
#include "losses.hpp"

namespace lapstyle {

struct TrainingConfig {
  std::string stage = "draft";  // "draft" | "revision"
  int level = 1;                // revision level, 1-based

  std::string content_dir;
  std::string style_image;
  std::string extractor;      // weights archive for the fixed encoder
  std::string prior_bundle;   // revision stages: bundle from the previous stage
  std::string out;            // final bundle path ("" = do not write)
  std::string log_path;       // loss log ("" = <out>.log, or no log if out empty)
  std::string checkpoint_dir; // "" = directory of `out`

  int resolution = 128;
  int iterations = 30000;
  int batch_size = 5;
  double learning_rate = 1e-4;
  LossWeights weights;  // lambda1 16, lambda2 3, alpha 3, beta 1
  uint64_t seed = 0;
  int checkpoint_every = 1000;
};

// key = value lines, '#' comments. Unknown keys are rejected.
TrainingConfig parse_config_file(const std::string& path);
void apply_config_override(TrainingConfig& cfg, const std::string& key,
                           const std::string& value);
nlohmann::json config_to_json(const TrainingConfig& cfg);

// Endless shuffled stream over a content directory. Every epoch reshuffles
// with the seeded generator; each draw resizes the short side to
// round(1.12 * resolution) and takes a random resolution^2 crop. Undecodable
// files are dropped with a warning on stderr.
class ContentSampler {
 public:
  ContentSampler(const std::string& dir, int resolution, int batch_size, uint64_t seed);
  torch::Tensor next_batch();  // (B, 3, res, res) in [0, 1]
  size_t corpus_size() const { return files_.size(); }

 private:
  torch::Tensor next_sample();
  std::vector<std::string> files_;
  int resolution_;
  int batch_size_;
  std::mt19937_64 rng_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

// Stage 1: optimize the drafting decoder with L_Draft at the draft
// resolution. The extractor stays frozen throughout.
ModelBundle train_drafting(const TrainingConfig& cfg);

// Stage 2+: optimize revision net `level` (and a fresh patch discriminator)
// at resolution draft_res * 2^level with every earlier stage frozen.
// Alternates one discriminator and one generator step per iteration; with
// beta == 0 the discriminator is skipped entirely.
ModelBundle train_revision(const TrainingConfig& cfg, const ModelBundle& prior, int level);

// Loss log access: line-delimited `step=<n> component=<name> value=<float>`.
struct LossLogEntry {
  int step;
  std::string component;
  double value;
};
std::vector<LossLogEntry> read_loss_log(const std::string& path);

}  // namespace lapstyle
