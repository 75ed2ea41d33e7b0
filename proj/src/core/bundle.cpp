#include "bundle.hpp"

#include "tensor_archive.hpp"

namespace lapstyle {

TensorArchive bundle_to_archive(const ModelBundle& bundle) {
  TensorArchive ar;
  ar.meta() = bundle.meta;
  ar.meta()["kind"] = "model_bundle";
  ar.meta()["concat_order"] = "residual_first";

  bundle.stack.extractor.add_to_archive(ar, "extractor/");
  bundle.stack.decoder->save(ar, "drafting/");
  for (const auto& [tag, stats] : bundle.stack.style.stats) {
    ar.put("style/" + tag + "/mean", stats.mean);
    ar.put("style/" + tag + "/std", stats.std);
  }
  for (size_t k = 0; k < bundle.stack.revisions.size(); ++k) {
    bundle.stack.revisions[k]->save(ar, "revision/" + std::to_string(k + 1) + "/");
  }
  if (bundle.has_discriminator()) bundle.discriminator->save(ar, "discriminator/");
  return ar;
}

ModelBundle bundle_from_archive(const TensorArchive& ar) {
  if (ar.meta().value("kind", "") != "model_bundle") {
    throw LoadError("archive is not a model bundle");
  }
  ModelBundle bundle;
  bundle.meta = ar.meta();
  bundle.stack.extractor = FeatureExtractor::from_archive(ar, "extractor/");
  bundle.stack.decoder = load_drafting_decoder(ar, "drafting/");
  for (const auto& tag : StyleContext::taps()) {
    bundle.stack.style.stats[tag] = {ar.get("style/" + tag + "/mean"),
                                     ar.get("style/" + tag + "/std")};
  }
  for (int k = 1; ar.contains("revision/" + std::to_string(k) + "/r1/conv1/weight"); ++k) {
    bundle.stack.revisions.push_back(
        load_revision_net(ar, "revision/" + std::to_string(k) + "/"));
  }
  if (ar.contains("discriminator/conv1/weight")) {
    bundle.discriminator = load_patch_discriminator(ar, "discriminator/");
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  bundle_to_archive(bundle).save(path);
}

ModelBundle load_bundle(const std::string& path) {
  return bundle_from_archive(TensorArchive::load(path));
}

}  // namespace lapstyle
