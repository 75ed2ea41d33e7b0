#include "pyramid.hpp"

namespace lapstyle {

namespace F = torch::nn::functional;

static void check_nchw(const torch::Tensor& t, const char* op) {
  if (t.dim() != 4) {
    throw DimensionError(std::string(op) + " expects (N, C, H, W), got " +
                         std::string(torch::str(t.sizes())));
  }
}

torch::Tensor downsample2(const torch::Tensor& nchw) {
  check_nchw(nchw, "downsample");
  if (nchw.size(2) % 2 != 0 || nchw.size(3) % 2 != 0) {
    throw DimensionError("downsample needs even dims, got " +
                         std::to_string(nchw.size(2)) + "x" + std::to_string(nchw.size(3)));
  }
  return F::avg_pool2d(nchw, F::AvgPool2dFuncOptions(2));
}

torch::Tensor upsample(const torch::Tensor& nchw, int64_t factor) {
  check_nchw(nchw, "upsample");
  if (factor != 2 && factor != 4) {
    throw ParameterError("upsample factor must be 2 or 4, got " + std::to_string(factor));
  }
  return F::interpolate(nchw, F::InterpolateFuncOptions()
                                  .scale_factor(std::vector<double>{double(factor), double(factor)})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
}

TensorPyramid decompose(const torch::Tensor& nchw, int levels) {
  check_nchw(nchw, "decompose");
  if (levels < 1) throw ParameterError("levels must be >= 1, got " + std::to_string(levels));
  const int64_t div = int64_t{1} << (levels - 1);
  if (nchw.size(2) % div != 0 || nchw.size(3) % div != 0) {
    throw DimensionError("dims " + std::to_string(nchw.size(2)) + "x" +
                         std::to_string(nchw.size(3)) + " not divisible by 2^" +
                         std::to_string(levels - 1));
  }
  std::vector<torch::Tensor> gaussians{nchw};
  for (int k = 1; k < levels; ++k) gaussians.push_back(downsample2(gaussians.back()));

  TensorPyramid pyr;
  pyr.base = gaussians.back();
  for (int k = levels - 1; k >= 1; --k) {
    pyr.residuals.push_back(gaussians[k - 1] - upsample(gaussians[k], 2));
  }
  return pyr;
}

torch::Tensor aggregate(const torch::Tensor& base, const std::vector<torch::Tensor>& residuals,
                        bool clamp_output) {
  check_nchw(base, "aggregate");
  torch::Tensor cur = base;
  for (size_t i = 0; i < residuals.size(); ++i) {
    const auto& r = residuals[i];
    if (r.size(2) != 2 * cur.size(2) || r.size(3) != 2 * cur.size(3)) {
      throw DimensionError("residual " + std::to_string(i) + " is " +
                           std::to_string(r.size(2)) + "x" + std::to_string(r.size(3)) +
                           ", expected " + std::to_string(2 * cur.size(2)) + "x" +
                           std::to_string(2 * cur.size(3)));
    }
    cur = upsample(cur, 2) + r;
  }
  return clamp_output ? cur.clamp(0.0f, 1.0f) : cur;
}

Image downsample(const Image& img) {
  return Image::from_batched(downsample2(img.batched()));
}

Image upsample(const Image& img, int64_t factor) {
  return Image::from_batched(upsample(img.batched(), factor));
}

PyramidDecomposition decompose(const Image& img, int levels) {
  TensorPyramid pyr = decompose(img.batched(), levels);
  PyramidDecomposition out;
  out.base = Image(pyr.base.squeeze(0));
  for (auto& r : pyr.residuals) out.residuals.emplace_back(r.squeeze(0));
  return out;
}

Image aggregate(const Image& base, const std::vector<Image>& residuals, bool clamp_output) {
  std::vector<torch::Tensor> rs;
  rs.reserve(residuals.size());
  for (const auto& r : residuals) rs.push_back(r.batched());
  return Image::from_batched(aggregate(base.batched(), rs, clamp_output));
}

}  // namespace lapstyle
