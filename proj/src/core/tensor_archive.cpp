#include "tensor_archive.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace lapstyle {

using nlohmann::json;

static constexpr char kMagic[8] = {'L', 'S', 'T', 'E', 'N', 'S', 'R', '1'};

TensorArchive::TensorArchive() : meta_(std::make_unique<json>(json::object())) {}
TensorArchive::TensorArchive(const TensorArchive& o)
    : tensors_(o.tensors_), meta_(std::make_unique<json>(*o.meta_)) {}
TensorArchive& TensorArchive::operator=(const TensorArchive& o) {
  tensors_ = o.tensors_;
  *meta_ = *o.meta_;
  return *this;
}
TensorArchive::TensorArchive(TensorArchive&&) noexcept = default;
TensorArchive& TensorArchive::operator=(TensorArchive&&) noexcept = default;
TensorArchive::~TensorArchive() = default;

json& TensorArchive::meta() { return *meta_; }
const json& TensorArchive::meta() const { return *meta_; }

static std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw ParameterError("unsupported tensor dtype in archive");
  }
}

static torch::ScalarType dtype_from_name(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  throw IntegrityError("unknown dtype in manifest: " + s);
}

void TensorArchive::put(const std::string& name, const torch::Tensor& t) {
  if (name.empty()) throw ParameterError("tensor name must not be empty");
  tensors_[name] = t.detach().contiguous().cpu();
}

torch::Tensor TensorArchive::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LoadError("archive has no tensor named '" + name + "'");
  return it->second;
}

bool TensorArchive::contains(const std::string& name) const {
  return tensors_.count(name) > 0;
}

std::vector<std::string> TensorArchive::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tensors_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  return out;
}

static uint32_t crc_update(uint32_t crc, const void* data, size_t n) {
  return static_cast<uint32_t>(
      ::crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void TensorArchive::save(const std::string& path) const {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["meta"] = *meta_;

  std::string payload;
  json tensor_list = json::array();
  for (const auto& [name, t] : tensors_) {
    json entry;
    entry["name"] = name;
    entry["dtype"] = dtype_name(t.scalar_type());
    entry["shape"] = std::vector<int64_t>(t.sizes().begin(), t.sizes().end());
    entry["offset"] = payload.size();
    const size_t nbytes = t.numel() * t.element_size();
    entry["nbytes"] = nbytes;
    payload.append(reinterpret_cast<const char*>(t.const_data_ptr()), nbytes);
    tensor_list.push_back(std::move(entry));
  }
  manifest["tensors"] = std::move(tensor_list);

  char crc_hex[16];
  std::snprintf(crc_hex, sizeof(crc_hex), "%08x",
                crc_update(crc_update(0, nullptr, 0), payload.data(), payload.size()));
  manifest["payload_crc32"] = crc_hex;

  const std::string mjson = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t msize = mjson.size();
  out.write(reinterpret_cast<const char*>(&msize), sizeof(msize));
  out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("short write: " + path);
}

TensorArchive TensorArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError("not a tensor archive (bad magic): " + path);
  }
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (in.gcount() != sizeof(version)) throw IntegrityError("truncated header: " + path);
  if (version != kFormatVersion) {
    throw VersionError("archive format version " + std::to_string(version) +
                       " is incompatible with supported version " +
                       std::to_string(kFormatVersion) + ": " + path);
  }
  uint64_t msize = 0;
  in.read(reinterpret_cast<char*>(&msize), sizeof(msize));
  if (in.gcount() != sizeof(msize)) throw IntegrityError("truncated header: " + path);

  std::string mjson(msize, '\0');
  in.read(mjson.data(), static_cast<std::streamsize>(msize));
  if (static_cast<uint64_t>(in.gcount()) != msize) {
    throw IntegrityError("truncated manifest: " + path);
  }
  json manifest;
  try {
    manifest = json::parse(mjson);
  } catch (const json::exception& e) {
    throw IntegrityError("malformed manifest in " + path + ": " + e.what());
  }

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  char crc_hex[16];
  std::snprintf(crc_hex, sizeof(crc_hex), "%08x",
                crc_update(crc_update(0, nullptr, 0), payload.data(), payload.size()));
  const std::string expected = manifest.value("payload_crc32", "");
  if (expected != crc_hex) {
    throw IntegrityError("payload checksum mismatch in " + path + " (manifest " + expected +
                         ", actual " + crc_hex + ")");
  }

  TensorArchive ar;
  *ar.meta_ = manifest.value("meta", json::object());
  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name");
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    const auto dtype = dtype_from_name(entry.at("dtype"));
    const uint64_t offset = entry.at("offset");
    const uint64_t nbytes = entry.at("nbytes");
    if (offset + nbytes > payload.size()) {
      throw IntegrityError("tensor '" + name + "' extends past payload in " + path);
    }
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<uint64_t>(t.numel() * t.element_size()) != nbytes) {
      throw IntegrityError("tensor '" + name + "' byte count disagrees with shape in " + path);
    }
    std::memcpy(t.data_ptr(), payload.data() + offset, nbytes);
    ar.tensors_[name] = std::move(t);
  }
  return ar;
}

uint32_t TensorArchive::checksum(const std::string& prefix) const {
  uint32_t crc = crc_update(0, nullptr, 0);
  for (const auto& [name, t] : tensors_) {
    if (name.rfind(prefix, 0) != 0) continue;
    crc = crc_update(crc, name.data(), name.size());
    crc = crc_update(crc, t.const_data_ptr(), t.numel() * t.element_size());
  }
  return crc;
}

}  // namespace lapstyle
