#include "losses.hpp"

#include <algorithm>
#include <numeric>

namespace lapstyle {

std::vector<std::string> LayerSchedule::union_tags() const {
  std::vector<std::string> tags = meanvar_perceptual;
  for (const auto& t : remd_selfsim) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  }
  return tags;
}

torch::Tensor flatten_features(const torch::Tensor& fm) {
  if (fm.dim() != 3) throw DimensionError("flatten_features expects (C, H, W)");
  return fm.flatten(1).transpose(0, 1);  // (HW, C)
}

std::vector<torch::Tensor> flatten_features_batch(const torch::Tensor& fm) {
  if (fm.dim() != 4) throw DimensionError("flatten_features_batch expects (N, C, H, W)");
  std::vector<torch::Tensor> out;
  out.reserve(fm.size(0));
  for (int64_t b = 0; b < fm.size(0); ++b) out.push_back(flatten_features(fm[b]));
  return out;
}

static void check_feature_matrix(const torch::Tensor& f, const char* who) {
  if (f.dim() != 2) throw DimensionError(std::string(who) + " expects (N, C) matrices");
  if (f.size(0) < 1) throw ParameterError(std::string(who) + ": empty feature set");
}

torch::Tensor cosine_cost(const torch::Tensor& fs, const torch::Tensor& fcs) {
  check_feature_matrix(fs, "cosine_cost");
  check_feature_matrix(fcs, "cosine_cost");
  if (fs.size(1) != fcs.size(1)) {
    throw DimensionError("cosine_cost: channel counts differ (" + std::to_string(fs.size(1)) +
                         " vs " + std::to_string(fcs.size(1)) + ")");
  }
  auto dots = torch::matmul(fs, fcs.transpose(0, 1));
  auto denom = torch::outer(fs.norm(2, 1), fcs.norm(2, 1)) + kCosineEps;
  return 1.0 - dots / denom;
}

torch::Tensor remd_loss(const torch::Tensor& fs, const torch::Tensor& fcs) {
  auto cost = cosine_cost(fs, fcs);
  auto style_side = std::get<0>(cost.min(1)).mean();
  auto output_side = std::get<0>(cost.min(0)).mean();
  return torch::maximum(style_side, output_side);
}

static std::pair<torch::Tensor, torch::Tensor> column_stats(const torch::Tensor& f) {
  auto mean = f.mean(0);
  auto var = (f - mean).pow(2).mean(0);
  return {mean, (var + kStatsEps).sqrt()};
}

torch::Tensor mean_variance_loss(const torch::Tensor& fs, const torch::Tensor& fcs) {
  check_feature_matrix(fs, "mean_variance_loss");
  check_feature_matrix(fcs, "mean_variance_loss");
  if (fs.size(1) != fcs.size(1)) {
    throw DimensionError("mean_variance_loss: channel counts differ");
  }
  auto [mu_s, sigma_s] = column_stats(fs);
  auto [mu_cs, sigma_cs] = column_stats(fcs);
  return (mu_s - mu_cs).norm(2) + (sigma_s - sigma_cs).norm(2);
}

torch::Tensor perceptual_loss(const torch::Tensor& fc, const torch::Tensor& fcs) {
  check_feature_matrix(fc, "perceptual_loss");
  check_feature_matrix(fcs, "perceptual_loss");
  if (fc.sizes() != fcs.sizes()) {
    throw DimensionError("perceptual_loss: shapes differ, " +
                         std::string(torch::str(fc.sizes())) + " vs " +
                         std::string(torch::str(fcs.sizes())));
  }
  auto normalize = [](const torch::Tensor& f) {
    auto mean = f.mean(0);
    auto std = (f - mean).pow(2).mean(0).sqrt().clamp_min(kStatsEps);
    return (f - mean) / std;
  };
  return (normalize(fc) - normalize(fcs)).norm(2);
}

torch::Tensor self_similarity_loss(const torch::Tensor& fc, const torch::Tensor& fcs) {
  check_feature_matrix(fc, "self_similarity_loss");
  check_feature_matrix(fcs, "self_similarity_loss");
  if (fc.size(0) != fcs.size(0)) {
    throw DimensionError("self_similarity_loss: position counts differ (" +
                         std::to_string(fc.size(0)) + " vs " + std::to_string(fcs.size(0)) + ")");
  }
  auto normalized_similarity = [](const torch::Tensor& f) {
    auto dots = torch::matmul(f, f.transpose(0, 1));
    auto norms = f.norm(2, 1);
    auto sim = dots / (torch::outer(norms, norms) + kCosineEps);
    auto colsum = sim.sum(0);
    // sign-preserving guard: near-cancelling columns of negative similarities
    // must not blow up the normalizer
    auto guarded = torch::where(colsum >= 0, colsum.clamp_min(kCosineEps),
                                colsum.clamp_max(-kCosineEps));
    return sim / guarded.unsqueeze(0);
  };
  const auto n = static_cast<double>(fc.size(0));
  return (normalized_similarity(fc) - normalized_similarity(fcs)).abs().sum() / (n * n);
}

AdversarialLosses adversarial_losses(const torch::Tensor& real_scores,
                                     const torch::Tensor& fake_scores) {
  if (!real_scores.isfinite().all().item<bool>() ||
      !fake_scores.isfinite().all().item<bool>()) {
    throw DataError("adversarial_losses: non-finite score map");
  }
  AdversarialLosses out;
  out.generator = (fake_scores - 1.0).pow(2).mean();
  out.discriminator = (real_scores - 1.0).pow(2).mean() + fake_scores.pow(2).mean();
  return out;
}

torch::Tensor subsample_rows(const torch::Tensor& rows, int64_t max_rows,
                             std::mt19937_64& rng) {
  const int64_t n = rows.size(0);
  if (n <= max_rows) return rows;
  std::vector<int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  return rows.index_select(0, torch::tensor(idx, torch::kInt64));
}

StyleFeatures make_style_features(const FeatureExtractor& ex, const torch::Tensor& style,
                                  const LayerSchedule& sched) {
  torch::NoGradGuard ng;
  auto feats = ex.extract(style, sched.union_tags());
  StyleFeatures out;
  for (auto& [tag, fm] : feats) out[tag] = flatten_features(fm.squeeze(0)).detach();
  return out;
}

LossTerms compute_base_losses(const FeatureExtractor& ex, const FeatureSet& content_feats,
                              const StyleFeatures& style_feats, const torch::Tensor& output,
                              const LayerSchedule& sched, std::mt19937_64& rng) {
  auto output_feats = ex.extract(output, sched.union_tags());
  const int64_t batch = output.size(0);
  const auto opts = output.options();

  LossTerms terms{torch::zeros({}, opts), torch::zeros({}, opts), torch::zeros({}, opts),
                  torch::zeros({}, opts)};
  for (int64_t b = 0; b < batch; ++b) {
    for (const auto& tag : sched.meanvar_perceptual) {
      auto f_cs = flatten_features(output_feats.at(tag)[b]);
      terms.mean_variance = terms.mean_variance + mean_variance_loss(style_feats.at(tag), f_cs);
      auto f_c = flatten_features(content_feats.at(tag)[b]);
      terms.perceptual = terms.perceptual + perceptual_loss(f_c, f_cs);
    }
    for (const auto& tag : sched.remd_selfsim) {
      auto f_cs = flatten_features(output_feats.at(tag)[b]);
      auto f_c = flatten_features(content_feats.at(tag)[b]);
      auto f_s = style_feats.at(tag);
      terms.remd = terms.remd + remd_loss(subsample_rows(f_s, kMaxLossPositions, rng),
                                          subsample_rows(f_cs, kMaxLossPositions, rng));
      // shared position set: self-similarity entries are position-paired
      const int64_t n = f_c.size(0);
      if (n > kMaxLossPositions) {
        std::vector<int64_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(kMaxLossPositions);
        std::sort(idx.begin(), idx.end());
        auto sel = torch::tensor(idx, torch::kInt64);
        f_c = f_c.index_select(0, sel);
        f_cs = f_cs.index_select(0, sel);
      }
      terms.self_similarity = terms.self_similarity + self_similarity_loss(f_c, f_cs);
    }
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  terms.perceptual = terms.perceptual * inv_batch;
  terms.self_similarity = terms.self_similarity * inv_batch;
  terms.mean_variance = terms.mean_variance * inv_batch;
  terms.remd = terms.remd * inv_batch;
  return terms;
}

LossTerms draft_loss(const FeatureExtractor& ex, const torch::Tensor& content,
                     const torch::Tensor& style, const torch::Tensor& output,
                     const LayerSchedule& sched, uint64_t sampler_seed) {
  if (content.sizes() != output.sizes()) {
    throw DimensionError("draft_loss: content and output resolutions differ");
  }
  if (style.size(-1) != content.size(-1) || style.size(-2) != content.size(-2)) {
    throw DimensionError("draft_loss: style resolution differs from content");
  }
  FeatureSet content_feats;
  {
    torch::NoGradGuard ng;
    content_feats = ex.extract(content, sched.union_tags());
  }
  auto style_feats = make_style_features(ex, style, sched);
  std::mt19937_64 rng(sampler_seed);
  return compute_base_losses(ex, content_feats, style_feats, output, sched, rng);
}

}  // namespace lapstyle
