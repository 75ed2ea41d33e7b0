#pragma once

#include <nlohmann/json.hpp>

#include "discriminator.hpp"
#include "revision.hpp"

namespace lapstyle {

// Versioned named-tensor archive holding every trained parameter set plus
// metadata. Namespaces: extractor/, drafting/, style/, revision/<k>/,
// discriminator/. The meta object records the style image checksum, stage
// resolutions, concat order and a config snapshot. Bundles are
// inference-self-contained; the discriminator is carried for resumed
// training but ignored at inference.
struct ModelBundle {
  StylizationStack stack;
  PatchDiscriminator discriminator{nullptr};
  nlohmann::json meta;

  int draft_resolution() const { return meta.value("draft_resolution", 0); }
  std::vector<int> revision_resolutions() const {
    return meta.value("revision_resolutions", std::vector<int>{});
  }
  bool has_discriminator() const { return discriminator.get() != nullptr; }
};

// Archive-level round trips preserve tensors bitwise.
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

TensorArchive bundle_to_archive(const ModelBundle& bundle);
ModelBundle bundle_from_archive(const TensorArchive& ar);

}  // namespace lapstyle
