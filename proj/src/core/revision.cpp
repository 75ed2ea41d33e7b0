#include "revision.hpp"

#include <chrono>

#include "tensor_archive.hpp"

namespace lapstyle {

namespace F = torch::nn::functional;
using clock_type = std::chrono::steady_clock;

RevisionNetImpl::RevisionNetImpl() {
  r1_conv1 = register_module(
      "r1_conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(6, 64, 3).padding(1)));
  r1_conv2 = register_module(
      "r1_conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 64, 3).stride(2).padding(1)));
  r2_res = register_module("r2_resblock", ResBlock(64));
  r3_conv1 = register_module(
      "r3_conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 64, 3).padding(1)));
  r3_conv2 = register_module(
      "r3_conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 3, 3).padding(1)));
  init_conv_weights(*this);
  torch::NoGradGuard ng;
  r3_conv2->weight.zero_();
  r3_conv2->bias.zero_();
}

torch::Tensor RevisionNetImpl::forward(const torch::Tensor& residual,
                                       const torch::Tensor& draft_up) {
  if (residual.sizes() != draft_up.sizes()) {
    throw DimensionError("revision: residual " + std::string(torch::str(residual.sizes())) +
                         " and draft " + std::string(torch::str(draft_up.sizes())) +
                         " must share dims");
  }
  if (residual.size(2) % 2 != 0 || residual.size(3) % 2 != 0) {
    throw DimensionError("revision needs even dims, got " + std::to_string(residual.size(2)) +
                         "x" + std::to_string(residual.size(3)));
  }
  // concat order is fixed (residual first) and recorded in bundle manifests
  auto x = torch::cat({residual, draft_up}, 1);
  x = torch::relu(r1_conv1->forward(x));
  x = torch::relu(r1_conv2->forward(x));
  x = r2_res->forward(x);
  x = F::interpolate(x, F::InterpolateFuncOptions()
                            .scale_factor(std::vector<double>{2.0, 2.0})
                            .mode(torch::kNearest));
  x = torch::relu(r3_conv1->forward(x));
  return r3_conv2->forward(x);
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

void RevisionNetImpl::save(TensorArchive& ar, const std::string& prefix) const {
  put_conv(ar, prefix + "r1/conv1", r1_conv1);
  put_conv(ar, prefix + "r1/conv2", r1_conv2);
  put_conv(ar, prefix + "r2/resblock/conv3x3", r2_res->conv3);
  put_conv(ar, prefix + "r2/resblock/conv1x1", r2_res->conv1);
  put_conv(ar, prefix + "r3/conv1", r3_conv1);
  put_conv(ar, prefix + "r3/conv2", r3_conv2);
}

RevisionNet load_revision_net(const TensorArchive& ar, const std::string& prefix) {
  RevisionNet net;
  get_conv(ar, prefix + "r1/conv1", net->r1_conv1);
  get_conv(ar, prefix + "r1/conv2", net->r1_conv2);
  get_conv(ar, prefix + "r2/resblock/conv3x3", net->r2_res->conv3);
  get_conv(ar, prefix + "r2/resblock/conv1x1", net->r2_res->conv1);
  get_conv(ar, prefix + "r3/conv1", net->r3_conv1);
  get_conv(ar, prefix + "r3/conv2", net->r3_conv2);
  return net;
}

torch::Tensor stylize_pyramid(const StylizationStack& stack, const torch::Tensor& content,
                              int levels, StageTimings* timings) {
  if (levels < 0 || levels > stack.level_count()) {
    throw ConfigError("requested " + std::to_string(levels) + " revision levels, stack has " +
                      std::to_string(stack.level_count()));
  }
  const int64_t div = (int64_t{1} << levels) * 16;
  if (content.size(2) % div != 0 || content.size(3) % div != 0) {
    throw DimensionError("content dims " + std::to_string(content.size(2)) + "x" +
                         std::to_string(content.size(3)) + " not divisible by " +
                         std::to_string(div) + " for " + std::to_string(levels) +
                         " revision levels");
  }

  auto pyr = decompose(content, levels + 1);

  auto t0 = clock_type::now();
  auto decoder = stack.decoder;  // shared impl; forward is const in effect
  auto cur = draft_forward(stack.extractor, decoder, pyr.base, stack.style);
  if (timings) {
    timings->draft_seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    timings->revision_seconds.clear();
  }

  for (int k = 0; k < levels; ++k) {
    auto t1 = clock_type::now();
    auto draft_up = upsample(cur, 2);
    auto rev = stack.revisions[k];
    auto r_cs = rev->forward(pyr.residuals[k], draft_up);
    cur = draft_up + r_cs;
    if (timings) {
      timings->revision_seconds.push_back(
          std::chrono::duration<double>(clock_type::now() - t1).count());
    }
  }
  return cur;
}

}  // namespace lapstyle
