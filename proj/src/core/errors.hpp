#pragma once

#include <stdexcept>
#include <string>

namespace lapstyle {

// Error classes map onto the process exit codes / C API status values:
// usage 1, data 2, integrity 3. Anything else is an internal failure (4).
enum class ErrorClass { kUsage = 1, kData = 2, kIntegrity = 3, kInternal = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

// Shape/size preconditions (odd dims, channel mismatch, indivisible sizes).
struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

// Bad argument values (unsupported factor, empty feature set, bad flag).
struct ParameterError : Error {
  explicit ParameterError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

// Invalid or inconsistent configuration (missing prior namespaces, stage mismatch).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

// Unreadable inputs: undecodable images, empty corpora, non-finite losses.
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

// Malformed weight archives (missing layer, wrong tensor shape).
struct LoadError : Error {
  explicit LoadError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

// Archive format version incompatibility; message names both versions.
struct VersionError : Error {
  explicit VersionError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

// Corrupted payloads: checksum mismatch, truncation, bad magic.
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& what) : Error(ErrorClass::kIntegrity, what) {}
};

}  // namespace lapstyle
