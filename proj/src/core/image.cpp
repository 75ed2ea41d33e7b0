#include "image.hpp"

#include <zlib.h>

#include <fstream>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace lapstyle {

Image::Image(torch::Tensor chw) : chw_(std::move(chw)) {
  if (chw_.dim() != 3 || chw_.size(0) != 3) {
    throw DimensionError("image tensor must be (3, H, W), got " +
                         std::string(torch::str(chw_.sizes())));
  }
  if (chw_.scalar_type() != torch::kFloat32) chw_ = chw_.to(torch::kFloat32);
  if (!chw_.isfinite().all().item<bool>()) {
    throw DataError("image contains non-finite values");
  }
}

Image Image::from_batched(const torch::Tensor& nchw) {
  if (nchw.dim() != 4 || nchw.size(0) != 1) {
    throw DimensionError("expected a (1, 3, H, W) tensor");
  }
  return Image(nchw.squeeze(0));
}

Image load_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image: " + path);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8);
  auto chw = hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0f).contiguous();
  return Image(chw);
}

void save_image(const Image& img, const std::string& path) {
  auto hwc = img.tensor().clamp(0.0f, 1.0f).mul(255.0f).round().to(torch::kUInt8);
  hwc = hwc.permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3,
              hwc.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path, bgr)) throw DataError("cannot write image: " + path);
}

torch::Tensor resize_bilinear(const torch::Tensor& nchw, int64_t out_h, int64_t out_w) {
  if (nchw.dim() != 4) throw DimensionError("resize expects (N, C, H, W)");
  if (out_h < 1 || out_w < 1) throw ParameterError("resize target must be positive");
  namespace F = torch::nn::functional;
  return F::interpolate(nchw, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{out_h, out_w})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
}

uint32_t crc32_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()),
                  static_cast<uInt>(in.gcount()));
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace lapstyle
