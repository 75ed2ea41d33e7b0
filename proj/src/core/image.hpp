#pragma once

#include <torch/torch.h>

#include <string>

#include "errors.hpp"

namespace lapstyle {

// An image is a (3, H, W) float32 tensor, RGB, nominally in [0, 1].
// Residual images reuse the same type and may hold negative values.
class Image {
 public:
  Image() = default;
  explicit Image(torch::Tensor chw);

  int64_t height() const { return chw_.size(1); }
  int64_t width() const { return chw_.size(2); }
  const torch::Tensor& tensor() const { return chw_; }
  bool defined() const { return chw_.defined(); }

  // (1, 3, H, W) view for network input.
  torch::Tensor batched() const { return chw_.unsqueeze(0); }
  static Image from_batched(const torch::Tensor& nchw);

 private:
  torch::Tensor chw_;
};

// PNG/JPEG decode; 8-bit channels divided by 255.
Image load_image(const std::string& path);

// Encode as round(255 * clamp(v, 0, 1)); format chosen by extension.
void save_image(const Image& img, const std::string& path);

// Bilinear resize to an arbitrary size (data pipeline / style image prep).
// Pyramid scaling lives in pyramid.hpp; this is general-purpose.
torch::Tensor resize_bilinear(const torch::Tensor& nchw, int64_t out_h, int64_t out_w);

uint32_t crc32_of_file(const std::string& path);

}  // namespace lapstyle
