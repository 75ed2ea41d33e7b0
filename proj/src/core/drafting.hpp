#pragma once

#include <torch/torch.h>

#include <map>
#include <string>

#include "extractor.hpp"

namespace lapstyle {

class TensorArchive;

// Adaptive instance normalization: replace the per-channel mean/std of the
// content map with the style stats. content: (N, C, H, W); style stats: (C).
torch::Tensor adain(const torch::Tensor& content, const ChannelStats& style_stats);

// AdaIN modulation stats of the style image at the encoder taps, computed
// once per style per stage and immutable afterwards.
struct StyleContext {
  std::map<std::string, ChannelStats> stats;  // tags 2_1, 3_1, 4_1
  static const std::vector<std::string>& taps();
};
StyleContext make_style_context(const FeatureExtractor& ex, const torch::Tensor& style_1chw);

// 3x3 conv + ReLU, 1x1 conv, additive identity. No normalization layers.
struct ResBlockImpl : torch::nn::Module {
  explicit ResBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv3{nullptr}, conv1{nullptr};
};
TORCH_MODULE(ResBlock);

// Decoder of the drafting network. Consumes AdaIN-modulated encoder taps at
// 4_1 / 3_1 / 2_1 and decodes back to an RGB image of the input resolution:
//
//   d4: ResBlock(512), conv 512->256
//   d3: upsample x2, add AdaIN(3_1), ResBlock(256), conv 256->128
//   d2: upsample x2, add AdaIN(2_1), conv 128->128, conv 128->64
//   d1: upsample x2, conv 64->64, conv 64->3 (no activation)
//
// Upsampling is nearest-neighbor; all convs are 3x3 zero-padded with ReLU
// except the final one. Output is unbounded; clamping happens at export.
struct DraftingDecoderImpl : torch::nn::Module {
  DraftingDecoderImpl();
  torch::Tensor forward(const torch::Tensor& adain4, const torch::Tensor& adain3,
                        const torch::Tensor& adain2);
  void save(TensorArchive& ar, const std::string& prefix) const;

  ResBlock d4_res{nullptr}, d3_res{nullptr};
  torch::nn::Conv2d d4_conv{nullptr}, d3_conv{nullptr}, d2_conv1{nullptr}, d2_conv2{nullptr},
      d1_conv1{nullptr}, d1_conv2{nullptr};
};
TORCH_MODULE(DraftingDecoder);

DraftingDecoder load_drafting_decoder(const TensorArchive& ar, const std::string& prefix);

// Decode content taps (must include 2_1, 3_1, 4_1) modulated by the style
// context. Lets training reuse an extraction it already has.
torch::Tensor decode_with_style(DraftingDecoder& decoder, const FeatureSet& content_taps,
                                const StyleContext& style);

// Full drafting pass: extract content taps, AdaIN them against the style
// context, decode. content: (N, 3, H, W), H and W divisible by 16.
torch::Tensor draft_forward(const FeatureExtractor& ex, DraftingDecoder& decoder,
                            const torch::Tensor& content, const StyleContext& style);

// Kaiming fan-in init for every conv weight, zero biases.
void init_conv_weights(torch::nn::Module& m, double leaky_slope = 0.0);

}  // namespace lapstyle
