#pragma once

#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "errors.hpp"

namespace lapstyle {

// Flat named-tensor container, one file:
//
//   bytes 0..7   magic "LSTENSR1"
//   u32 LE       format version (currently 1)
//   u64 LE       manifest size in bytes
//   manifest     UTF-8 JSON
//   payload      raw tensor bytes, little-endian, tightly packed
//
// The manifest lists every tensor (name, dtype, shape, offset into the
// payload, byte count), a crc32 of the whole payload, and a free-form "meta"
// object. Offsets are ascending so any language can stream the payload.
class TensorArchive {
 public:
  static constexpr uint32_t kFormatVersion = 1;

  void put(const std::string& name, const torch::Tensor& t);
  torch::Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  nlohmann::json& meta();
  const nlohmann::json& meta() const;

  void save(const std::string& path) const;
  static TensorArchive load(const std::string& path);

  // crc32 over the raw bytes of every tensor whose name starts with prefix,
  // in lexicographic name order. Used for frozen-parameter contracts.
  uint32_t checksum(const std::string& prefix) const;

  TensorArchive();
  TensorArchive(const TensorArchive&);
  TensorArchive& operator=(const TensorArchive&);
  TensorArchive(TensorArchive&&) noexcept;
  TensorArchive& operator=(TensorArchive&&) noexcept;
  ~TensorArchive();

 private:
  std::map<std::string, torch::Tensor> tensors_;
  std::unique_ptr<nlohmann::json> meta_;
};

}  // namespace lapstyle
