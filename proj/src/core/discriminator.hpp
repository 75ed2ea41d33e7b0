#pragma once

#include <torch/torch.h>

#include "errors.hpp"

namespace lapstyle {

class TensorArchive;

// Shallow patch critic: five 3x3 stride-1 convs (3->32->32->32->32->1) with
// LeakyReLU(0.2) between, no normalization. Same padding keeps the score map
// at the input resolution; the 11-pixel receptive field restricts it to
// local patterns.
struct PatchDiscriminatorImpl : torch::nn::Module {
  static constexpr int kLayers = 5;
  static constexpr int kHiddenChannels = 32;

  PatchDiscriminatorImpl();
  // (N, 3, H, W) -> (N, 1, H, W) per-location realness scores.
  torch::Tensor forward(const torch::Tensor& x);
  void save(TensorArchive& ar, const std::string& prefix) const;

  std::vector<torch::nn::Conv2d> convs;
};
TORCH_MODULE(PatchDiscriminator);

PatchDiscriminator load_patch_discriminator(const TensorArchive& ar, const std::string& prefix);

// Theoretical receptive field of one output location: 1 + sum over layers of
// (kernel - 1) * product of earlier strides.
int receptive_field(const PatchDiscriminator& d);

}  // namespace lapstyle
