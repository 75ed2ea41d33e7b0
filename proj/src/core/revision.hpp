#pragma once

#include <torch/torch.h>

#include <vector>

#include "drafting.hpp"
#include "pyramid.hpp"

namespace lapstyle {

// Residual detail generator for one pyramid level. Input is the 6-channel
// concatenation [content residual ; upsampled draft]; output is the residual
// detail image r_cs at the same resolution.
//
//   r1: conv 6->64 stride 1, conv 64->64 stride 2   (single downsample)
//   r2: ResBlock(64)
//   r3: upsample x2 (nearest), conv 64->64, conv 64->3
//
// The final conv starts zero-initialized so an untrained revision is the
// identity: r_cs == 0 and the stylization equals the upsampled draft.
struct RevisionNetImpl : torch::nn::Module {
  RevisionNetImpl();
  torch::Tensor forward(const torch::Tensor& residual, const torch::Tensor& draft_up);
  void save(TensorArchive& ar, const std::string& prefix) const;

  torch::nn::Conv2d r1_conv1{nullptr}, r1_conv2{nullptr}, r3_conv1{nullptr}, r3_conv2{nullptr};
  ResBlock r2_res{nullptr};
};
TORCH_MODULE(RevisionNet);

RevisionNet load_revision_net(const TensorArchive& ar, const std::string& prefix);

// Everything needed to stylize: the fixed encoder, the drafting decoder with
// its style context, and zero or more revision nets (level k doubles the
// resolution of level k-1).
struct StylizationStack {
  FeatureExtractor extractor;
  DraftingDecoder decoder{nullptr};
  StyleContext style;
  std::vector<RevisionNet> revisions;

  int level_count() const { return static_cast<int>(revisions.size()); }
};

struct StageTimings {
  double draft_seconds = 0.0;
  std::vector<double> revision_seconds;
};

// Full coarse-to-fine pass: decompose content into a (levels+1)-level
// pyramid, draft the base, then per level upsample, concatenate with the
// content residual, revise and aggregate. Content dims must be divisible by
// 2^levels * 16. Returns the unclamped aggregate; clamp at export.
torch::Tensor stylize_pyramid(const StylizationStack& stack, const torch::Tensor& content,
                              int levels, StageTimings* timings = nullptr);

inline torch::Tensor stylize_pyramid(const StylizationStack& stack,
                                     const torch::Tensor& content) {
  return stylize_pyramid(stack, content, stack.level_count());
}

}  // namespace lapstyle
