#pragma once

#include <torch/torch.h>

#include <random>
#include <vector>

#include "extractor.hpp"

namespace lapstyle {

// Loss weights: total = (l_p + lambda1 * l_ss) + alpha * (l_m + lambda2 * l_r),
// plus beta * adversarial during revision training.
struct LossWeights {
  double lambda1 = 16.0;
  double lambda2 = 3.0;
  double alpha = 3.0;
  double beta = 1.0;
};

struct LayerSchedule {
  std::vector<std::string> remd_selfsim = {"3_1", "4_1"};
  std::vector<std::string> meanvar_perceptual = {"1_1", "2_1", "3_1", "4_1", "5_1"};
  std::vector<std::string> union_tags() const;
};

inline constexpr double kCosineEps = 1e-8;
// Cost matrices are capped at this many positions per side; see subsample_rows.
inline constexpr int64_t kMaxLossPositions = 1024;

// Feature maps flattened to position-major matrices: (N, C) with one row per
// spatial location. All loss functions below take these.
torch::Tensor flatten_features(const torch::Tensor& fm_chw);            // (C,H,W) -> (HW, C)
std::vector<torch::Tensor> flatten_features_batch(const torch::Tensor& fm_nchw);

// C_ij = 1 - <Fs_i, Fcs_j> / (|Fs_i| |Fcs_j| + eps); entries in [0, 2].
torch::Tensor cosine_cost(const torch::Tensor& fs, const torch::Tensor& fcs);

// Relaxed earth mover distance: max of the two one-sided nearest-neighbor
// average costs under the cosine ground distance.
torch::Tensor remd_loss(const torch::Tensor& fs, const torch::Tensor& fcs);

// || mu(Fs) - mu(Fcs) ||_2 + || sigma(Fs) - sigma(Fcs) ||_2 over channel stats.
torch::Tensor mean_variance_loss(const torch::Tensor& fs, const torch::Tensor& fcs);

// L2 distance between channel-wise normalized features. Normalization divides
// by max(sqrt(var), eps) so per-channel affine maps are removed exactly.
torch::Tensor perceptual_loss(const torch::Tensor& fc, const torch::Tensor& fcs);

// Mean absolute difference between column-normalized pairwise cosine
// similarity matrices of Fc and Fcs.
torch::Tensor self_similarity_loss(const torch::Tensor& fc, const torch::Tensor& fcs);

// Least-squares GAN pair.
struct AdversarialLosses {
  torch::Tensor generator;      // mean((fake - 1)^2)
  torch::Tensor discriminator;  // mean((real - 1)^2) + mean(fake^2)
};
AdversarialLosses adversarial_losses(const torch::Tensor& real_scores,
                                     const torch::Tensor& fake_scores);

// Uniform subsample of up to max_rows rows, without replacement, seeded.
torch::Tensor subsample_rows(const torch::Tensor& rows, int64_t max_rows, std::mt19937_64& rng);

// The four style/content components, each summed over its schedule layers and
// averaged over the batch. Values stay attached to the autograd graph.
struct LossTerms {
  torch::Tensor perceptual;
  torch::Tensor self_similarity;
  torch::Tensor mean_variance;
  torch::Tensor remd;
  torch::Tensor weighted_total(const LossWeights& w) const {
    return (perceptual + w.lambda1 * self_similarity) +
           w.alpha * (mean_variance + w.lambda2 * remd);
  }
};

// Style features flattened once per stage: tag -> (N_s, C), detached.
using StyleFeatures = std::map<std::string, torch::Tensor>;
StyleFeatures make_style_features(const FeatureExtractor& ex, const torch::Tensor& style_1chw,
                                  const LayerSchedule& sched);

// content_feats: features of the content batch at sched.union_tags() (no grad
// needed); output: stylized batch (grad flows through the extractor into it).
LossTerms compute_base_losses(const FeatureExtractor& ex, const FeatureSet& content_feats,
                              const StyleFeatures& style_feats, const torch::Tensor& output,
                              const LayerSchedule& sched, std::mt19937_64& rng);

// Whole-image convenience: extracts everything itself (style/content at the
// same resolution as output). Seed drives the position subsampler.
LossTerms draft_loss(const FeatureExtractor& ex, const torch::Tensor& content,
                     const torch::Tensor& style, const torch::Tensor& output,
                     const LayerSchedule& sched, uint64_t sampler_seed = 0);

}  // namespace lapstyle
