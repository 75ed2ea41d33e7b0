#include "extractor.hpp"

#include <zlib.h>

#include <algorithm>

#include "tensor_archive.hpp"

namespace lapstyle {

namespace F = torch::nn::functional;

const std::vector<FeatureExtractor::LayerDef>& FeatureExtractor::layers() {
  static const std::vector<LayerDef> defs = {
      {"0", 3, 3, 1, false},      {"1_1", 3, 64, 3, false},   {"1_2", 64, 64, 3, false},
      {"2_1", 64, 128, 3, true},  {"2_2", 128, 128, 3, false}, {"3_1", 128, 256, 3, true},
      {"3_2", 256, 256, 3, false}, {"4_1", 256, 512, 3, true}, {"5_1", 512, 512, 3, true},
  };
  return defs;
}

const std::vector<std::string>& FeatureExtractor::tap_tags() {
  static const std::vector<std::string> tags = {"1_1", "1_2", "2_1", "2_2",
                                                "3_1", "3_2", "4_1", "5_1"};
  return tags;
}

ChannelStats channel_stats(const torch::Tensor& fm) {
  if (fm.dim() != 3 && fm.dim() != 4) {
    throw DimensionError("channel_stats expects (C, H, W) or (N, C, H, W)");
  }
  if (fm.size(-1) < 1 || fm.size(-2) < 1) throw DimensionError("empty spatial extent");
  auto x = fm.dim() == 3 ? fm.unsqueeze(0) : fm;
  auto flat = x.flatten(2);  // (N, C, HW)
  auto mean = flat.mean(2);
  auto var = (flat - mean.unsqueeze(2)).pow(2).mean(2);
  auto std = (var + kStatsEps).sqrt();
  if (fm.dim() == 3) return {mean.squeeze(0), std.squeeze(0)};
  return {mean, std};
}

void FeatureExtractor::validate() const {
  const auto& defs = layers();
  for (size_t i = 0; i < defs.size(); ++i) {
    const auto& d = defs[i];
    const auto expect_w =
        torch::IntArrayRef({d.out_channels, d.in_channels, d.kernel, d.kernel});
    if (weights_[i].sizes() != expect_w) {
      throw LoadError("extractor layer " + std::string(d.tag) + ": weight shape " +
                      std::string(torch::str(weights_[i].sizes())) + " does not match " +
                      std::string(torch::str(expect_w)));
    }
    if (biases_[i].sizes() != torch::IntArrayRef({d.out_channels})) {
      throw LoadError("extractor layer " + std::string(d.tag) + ": bias shape " +
                      std::string(torch::str(biases_[i].sizes())) + " does not match (" +
                      std::to_string(d.out_channels) + ")");
    }
    if (!weights_[i].isfinite().all().item<bool>() ||
        !biases_[i].isfinite().all().item<bool>()) {
      throw LoadError("extractor layer " + std::string(d.tag) + ": non-finite parameters");
    }
  }
}

FeatureExtractor FeatureExtractor::from_archive(const TensorArchive& ar,
                                                const std::string& prefix) {
  FeatureExtractor ex;
  for (const auto& d : layers()) {
    const std::string base = prefix + "conv" + d.tag;
    for (const char* part : {"/weight", "/bias"}) {
      if (!ar.contains(base + part)) {
        throw LoadError("weights archive is missing layer " + std::string(d.tag) + " (" +
                        base + part + ")");
      }
    }
    ex.weights_.push_back(ar.get(base + "/weight").to(torch::kFloat32).set_requires_grad(false));
    ex.biases_.push_back(ar.get(base + "/bias").to(torch::kFloat32).set_requires_grad(false));
  }
  ex.validate();
  return ex;
}

FeatureExtractor FeatureExtractor::load(const std::string& archive_path) {
  return from_archive(TensorArchive::load(archive_path), "extractor/");
}

FeatureExtractor FeatureExtractor::random(uint64_t seed) {
  torch::manual_seed(seed);
  torch::NoGradGuard ng;
  FeatureExtractor ex;
  for (const auto& d : layers()) {
    auto w = torch::empty({d.out_channels, d.in_channels, d.kernel, d.kernel});
    if (std::string(d.tag) == "0") {
      w.zero_();
      for (int c = 0; c < 3; ++c) w[c][c][0][0] = 1.0f;  // identity pre-conv
    } else {
      torch::nn::init::kaiming_normal_(w, 0.0, torch::kFanIn, torch::kReLU);
    }
    ex.weights_.push_back(w.set_requires_grad(false));
    ex.biases_.push_back(torch::zeros({d.out_channels}).set_requires_grad(false));
  }
  ex.validate();
  return ex;
}

void FeatureExtractor::add_to_archive(TensorArchive& ar, const std::string& prefix) const {
  const auto& defs = layers();
  for (size_t i = 0; i < defs.size(); ++i) {
    ar.put(prefix + "conv" + defs[i].tag + "/weight", weights_[i]);
    ar.put(prefix + "conv" + defs[i].tag + "/bias", biases_[i]);
  }
}

void FeatureExtractor::save(const std::string& archive_path) const {
  TensorArchive ar;
  ar.meta()["kind"] = "extractor";
  ar.meta()["input_normalization"] = "imagenet";
  add_to_archive(ar, "extractor/");
  ar.save(archive_path);
}

FeatureSet FeatureExtractor::extract(const torch::Tensor& images,
                                     const std::vector<std::string>& taps) const {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw DimensionError("extract expects (N, 3, H, W), got " +
                         std::string(torch::str(images.sizes())));
  }
  if (images.size(2) % 16 != 0 || images.size(3) % 16 != 0) {
    throw DimensionError("extract needs dims divisible by 16, got " +
                         std::to_string(images.size(2)) + "x" + std::to_string(images.size(3)));
  }
  const auto& defs = layers();
  size_t deepest = 0;
  for (const auto& tap : taps) {
    auto it = std::find_if(defs.begin(), defs.end(),
                           [&](const LayerDef& d) { return tap == d.tag; });
    if (it == defs.end() || tap == "0") throw ParameterError("unknown layer tag: " + tap);
    deepest = std::max(deepest, static_cast<size_t>(it - defs.begin()));
  }
  if (taps.empty()) throw ParameterError("extract needs at least one layer tag");

  static const auto imagenet_mean =
      torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1});
  static const auto imagenet_std =
      torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1});

  auto x = (images - imagenet_mean) / imagenet_std;
  FeatureSet out;
  for (size_t i = 0; i < defs.size() && i <= deepest; ++i) {
    const auto& d = defs[i];
    if (d.pool_before) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2).stride(2));
    x = F::conv2d(x, weights_[i], F::Conv2dFuncOptions().bias(biases_[i]).padding(d.kernel / 2));
    if (i > 0) x = torch::relu(x);  // conv0 is a linear pre-conv
    if (std::find(taps.begin(), taps.end(), d.tag) != taps.end()) out[d.tag] = x;
  }
  return out;
}

uint32_t FeatureExtractor::checksum() const {
  uint32_t crc = static_cast<uint32_t>(::crc32(0L, Z_NULL, 0));
  auto update = [&crc](const torch::Tensor& t) {
    auto c = t.contiguous();
    crc = static_cast<uint32_t>(::crc32(crc, reinterpret_cast<const Bytef*>(c.const_data_ptr()),
                                        static_cast<uInt>(c.numel() * c.element_size())));
  };
  for (size_t i = 0; i < weights_.size(); ++i) {
    update(weights_[i]);
    update(biases_[i]);
  }
  return crc;
}

}  // namespace lapstyle
