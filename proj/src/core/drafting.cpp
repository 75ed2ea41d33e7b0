#include "drafting.hpp"

#include "tensor_archive.hpp"

namespace lapstyle {

namespace F = torch::nn::functional;

torch::Tensor adain(const torch::Tensor& content, const ChannelStats& style_stats) {
  if (content.dim() != 4) throw DimensionError("adain expects (N, C, H, W)");
  const int64_t channels = content.size(1);
  if (style_stats.mean.numel() != channels || style_stats.std.numel() != channels) {
    throw DimensionError("adain: style stats have " + std::to_string(style_stats.mean.numel()) +
                         " channels, content has " + std::to_string(channels));
  }
  auto stats = channel_stats(content);                      // (N, C)
  auto c_mean = stats.mean.unsqueeze(2).unsqueeze(3);       // (N, C, 1, 1)
  auto c_std = stats.std.unsqueeze(2).unsqueeze(3);
  auto s_mean = style_stats.mean.view({1, channels, 1, 1});
  auto s_std = style_stats.std.view({1, channels, 1, 1});
  return s_std * (content - c_mean) / c_std + s_mean;
}

const std::vector<std::string>& StyleContext::taps() {
  static const std::vector<std::string> t = {"2_1", "3_1", "4_1"};
  return t;
}

StyleContext make_style_context(const FeatureExtractor& ex, const torch::Tensor& style) {
  torch::NoGradGuard ng;
  auto feats = ex.extract(style, StyleContext::taps());
  StyleContext ctx;
  for (const auto& tag : StyleContext::taps()) {
    auto stats = channel_stats(feats.at(tag).squeeze(0));
    ctx.stats[tag] = {stats.mean.detach(), stats.std.detach()};
  }
  return ctx;
}

static torch::nn::Conv2d make_conv(int in_c, int out_c, int kernel) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in_c, out_c, kernel).padding(kernel / 2));
}

ResBlockImpl::ResBlockImpl(int channels) {
  conv3 = register_module("conv3x3", make_conv(channels, channels, 3));
  conv1 = register_module("conv1x1", make_conv(channels, channels, 1));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  return x + conv1->forward(torch::relu(conv3->forward(x)));
}

static torch::Tensor up2_nearest(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest));
}

DraftingDecoderImpl::DraftingDecoderImpl() {
  d4_res = register_module("d4_resblock", ResBlock(512));
  d4_conv = register_module("d4_conv", make_conv(512, 256, 3));
  d3_res = register_module("d3_resblock", ResBlock(256));
  d3_conv = register_module("d3_conv", make_conv(256, 128, 3));
  d2_conv1 = register_module("d2_conv1", make_conv(128, 128, 3));
  d2_conv2 = register_module("d2_conv2", make_conv(128, 64, 3));
  d1_conv1 = register_module("d1_conv1", make_conv(64, 64, 3));
  d1_conv2 = register_module("d1_conv2", make_conv(64, 3, 3));
  init_conv_weights(*this);
}

torch::Tensor DraftingDecoderImpl::forward(const torch::Tensor& adain4,
                                           const torch::Tensor& adain3,
                                           const torch::Tensor& adain2) {
  auto x = torch::relu(d4_conv->forward(d4_res->forward(adain4)));
  x = up2_nearest(x) + adain3;
  x = torch::relu(d3_conv->forward(d3_res->forward(x)));
  x = up2_nearest(x) + adain2;
  x = torch::relu(d2_conv1->forward(x));
  x = torch::relu(d2_conv2->forward(x));
  x = up2_nearest(x);
  x = torch::relu(d1_conv1->forward(x));
  return d1_conv2->forward(x);
}

static void put_conv(TensorArchive& ar, const std::string& base, const torch::nn::Conv2d& c) {
  ar.put(base + "/weight", c->weight);
  ar.put(base + "/bias", c->bias);
}

static void get_conv(const TensorArchive& ar, const std::string& base, torch::nn::Conv2d& c) {
  torch::NoGradGuard ng;
  auto w = ar.get(base + "/weight");
  auto b = ar.get(base + "/bias");
  if (w.sizes() != c->weight.sizes() || b.sizes() != c->bias.sizes()) {
    throw LoadError("tensor shape mismatch at " + base);
  }
  c->weight.copy_(w);
  c->bias.copy_(b);
}

void DraftingDecoderImpl::save(TensorArchive& ar, const std::string& prefix) const {
  put_conv(ar, prefix + "d4/resblock/conv3x3", d4_res->conv3);
  put_conv(ar, prefix + "d4/resblock/conv1x1", d4_res->conv1);
  put_conv(ar, prefix + "d4/conv", d4_conv);
  put_conv(ar, prefix + "d3/resblock/conv3x3", d3_res->conv3);
  put_conv(ar, prefix + "d3/resblock/conv1x1", d3_res->conv1);
  put_conv(ar, prefix + "d3/conv", d3_conv);
  put_conv(ar, prefix + "d2/conv1", d2_conv1);
  put_conv(ar, prefix + "d2/conv2", d2_conv2);
  put_conv(ar, prefix + "d1/conv1", d1_conv1);
  put_conv(ar, prefix + "d1/conv2", d1_conv2);
}

DraftingDecoder load_drafting_decoder(const TensorArchive& ar, const std::string& prefix) {
  DraftingDecoder dec;
  get_conv(ar, prefix + "d4/resblock/conv3x3", dec->d4_res->conv3);
  get_conv(ar, prefix + "d4/resblock/conv1x1", dec->d4_res->conv1);
  get_conv(ar, prefix + "d4/conv", dec->d4_conv);
  get_conv(ar, prefix + "d3/resblock/conv3x3", dec->d3_res->conv3);
  get_conv(ar, prefix + "d3/resblock/conv1x1", dec->d3_res->conv1);
  get_conv(ar, prefix + "d3/conv", dec->d3_conv);
  get_conv(ar, prefix + "d2/conv1", dec->d2_conv1);
  get_conv(ar, prefix + "d2/conv2", dec->d2_conv2);
  get_conv(ar, prefix + "d1/conv1", dec->d1_conv1);
  get_conv(ar, prefix + "d1/conv2", dec->d1_conv2);
  return dec;
}

torch::Tensor decode_with_style(DraftingDecoder& decoder, const FeatureSet& content_taps,
                                const StyleContext& style) {
  auto a4 = adain(content_taps.at("4_1"), style.stats.at("4_1"));
  auto a3 = adain(content_taps.at("3_1"), style.stats.at("3_1"));
  auto a2 = adain(content_taps.at("2_1"), style.stats.at("2_1"));
  return decoder->forward(a4, a3, a2);
}

torch::Tensor draft_forward(const FeatureExtractor& ex, DraftingDecoder& decoder,
                            const torch::Tensor& content, const StyleContext& style) {
  FeatureSet taps;
  {
    torch::NoGradGuard ng;
    taps = ex.extract(content, StyleContext::taps());
  }
  return decode_with_style(decoder, taps, style);
}

void init_conv_weights(torch::nn::Module& m, double leaky_slope) {
  torch::NoGradGuard ng;
  for (auto& module : m.modules(/*include_self=*/false)) {
    if (auto* conv = module->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, leaky_slope, torch::kFanIn,
                                       leaky_slope == 0.0 ? torch::kReLU : torch::kLeakyReLU);
      torch::nn::init::zeros_(conv->bias);
    }
  }
}

}  // namespace lapstyle
