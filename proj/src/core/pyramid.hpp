#pragma once

#include <torch/torch.h>

#include <vector>

#include "image.hpp"

namespace lapstyle {

// Laplacian pyramid: base image at the coarsest level plus one residual per
// finer level, residuals ordered coarse-to-fine (finest last). Upsampling the
// base and adding residuals level by level reproduces the source exactly.
struct PyramidDecomposition {
  Image base;
  std::vector<Image> residuals;
  int level_count() const { return static_cast<int>(residuals.size()) + 1; }
};

// Tensor-level ops; all accept (N, C, H, W) and are linear in pixel values.
// 2x downsample is a 2x2 box average (bilinear at scale 1/2).
torch::Tensor downsample2(const torch::Tensor& nchw);
// Bilinear upsample, factor 2 or 4.
torch::Tensor upsample(const torch::Tensor& nchw, int64_t factor);

struct TensorPyramid {
  torch::Tensor base;
  std::vector<torch::Tensor> residuals;  // finest last
};
TensorPyramid decompose(const torch::Tensor& nchw, int levels);
torch::Tensor aggregate(const torch::Tensor& base, const std::vector<torch::Tensor>& residuals,
                        bool clamp_output);

// Image-level wrappers matching the domain types.
Image downsample(const Image& img);
Image upsample(const Image& img, int64_t factor);
PyramidDecomposition decompose(const Image& img, int levels);
Image aggregate(const Image& base, const std::vector<Image>& residuals,
                bool clamp_output = true);

}  // namespace lapstyle
