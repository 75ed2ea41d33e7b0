#pragma once

#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lapstyle {

class TensorArchive;

// Named feature maps keyed by layer tag ("1_1" .. "5_1").
using FeatureSet = std::map<std::string, torch::Tensor>;

// Per-channel spatial mean and std (std = sqrt(var + eps), eps = 1e-5).
// Shapes: (C) for a single map, (N, C) for a batch.
struct ChannelStats {
  torch::Tensor mean;
  torch::Tensor std;
};

ChannelStats channel_stats(const torch::Tensor& feature_map);

inline constexpr double kStatsEps = 1e-5;

// Fixed VGG-style convolutional trunk. Taps (post-ReLU):
//
//   tag   channels  spatial (input S)
//   1_1     64       S
//   1_2     64       S
//   2_1    128       S/2
//   2_2    128       S/2
//   3_1    256       S/4
//   3_2    256       S/4
//   4_1    512       S/8
//   5_1    512       S/16
//
// A 1x1 3->3 conv ("conv0", no activation) precedes conv1_1; inputs are
// ImageNet-normalized before it. All parameters are frozen: they never carry
// gradients and never enter an optimizer.
class FeatureExtractor {
 public:
  struct LayerDef {
    const char* tag;
    int in_channels;
    int out_channels;
    int kernel;
    bool pool_before;
  };
  static const std::vector<LayerDef>& layers();
  static const std::vector<std::string>& tap_tags();

  static FeatureExtractor load(const std::string& archive_path);
  static FeatureExtractor from_archive(const TensorArchive& ar, const std::string& prefix);
  // Seeded He-initialized weights; conv0 is identity. For training and tests
  // without a converted pretrained archive.
  static FeatureExtractor random(uint64_t seed);

  void add_to_archive(TensorArchive& ar, const std::string& prefix) const;
  void save(const std::string& archive_path) const;

  // images: (N, 3, H, W) in [0, 1], H and W divisible by 16.
  // Deterministic; gradients flow through the input only.
  FeatureSet extract(const torch::Tensor& images, const std::vector<std::string>& taps) const;

  uint32_t checksum() const;

 private:
  FeatureExtractor() = default;
  void validate() const;
  std::vector<torch::Tensor> weights_;  // one per LayerDef, conv0 first
  std::vector<torch::Tensor> biases_;
};

}  // namespace lapstyle
