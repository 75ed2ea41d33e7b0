#include "discriminator.hpp"

#include "drafting.hpp"
#include "tensor_archive.hpp"

namespace lapstyle {

PatchDiscriminatorImpl::PatchDiscriminatorImpl() {
  int in_c = 3;
  for (int i = 0; i < kLayers; ++i) {
    const int out_c = (i == kLayers - 1) ? 1 : kHiddenChannels;
    auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in_c, out_c, 3).padding(1));
    convs.push_back(register_module("conv" + std::to_string(i + 1), conv));
    in_c = out_c;
  }
  init_conv_weights(*this, 0.2);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw DimensionError("discriminator expects (N, 3, H, W)");
  }
  const int rf = 1 + kLayers * 2;
  if (x.size(2) < rf || x.size(3) < rf) {
    throw DimensionError("input " + std::to_string(x.size(2)) + "x" +
                         std::to_string(x.size(3)) + " is smaller than the receptive field (" +
                         std::to_string(rf) + ")");
  }
  auto h = x;
  for (int i = 0; i < kLayers; ++i) {
    h = convs[i]->forward(h);
    if (i + 1 < kLayers) h = torch::leaky_relu(h, 0.2);
  }
  return h;
}

void PatchDiscriminatorImpl::save(TensorArchive& ar, const std::string& prefix) const {
  for (int i = 0; i < kLayers; ++i) {
    ar.put(prefix + "conv" + std::to_string(i + 1) + "/weight", convs[i]->weight);
    ar.put(prefix + "conv" + std::to_string(i + 1) + "/bias", convs[i]->bias);
  }
}

PatchDiscriminator load_patch_discriminator(const TensorArchive& ar,
                                            const std::string& prefix) {
  PatchDiscriminator d;
  torch::NoGradGuard ng;
  for (int i = 0; i < PatchDiscriminatorImpl::kLayers; ++i) {
    const std::string base = prefix + "conv" + std::to_string(i + 1);
    auto w = ar.get(base + "/weight");
    auto b = ar.get(base + "/bias");
    if (w.sizes() != d->convs[i]->weight.sizes() || b.sizes() != d->convs[i]->bias.sizes()) {
      throw LoadError("tensor shape mismatch at " + base);
    }
    d->convs[i]->weight.copy_(w);
    d->convs[i]->bias.copy_(b);
  }
  return d;
}

int receptive_field(const PatchDiscriminator& d) {
  int rf = 1;
  int jump = 1;
  for (const auto& conv : d->convs) {
    const auto k = conv->options.kernel_size()->at(0);
    const auto s = conv->options.stride()->at(0);
    rf += static_cast<int>((k - 1) * jump);
    jump *= static_cast<int>(s);
  }
  return rf;
}

}  // namespace lapstyle
