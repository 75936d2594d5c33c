#pragma once

// Binary model files.
//
// Layout (all integers and floats little-endian):
//   magic "SCVIMODL" | u32 version | u64 body length | body | u32 CRC-32
// The body holds the algorithm tag, dimensions, schedule, priors, the
// vocabulary, then every matrix as row-major f64. The checksum covers all
// preceding bytes.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scvi/model.hpp"

namespace scvi {

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelIoErrc {
  Io = 1,
  BadMagic = 2,
  VersionMismatch = 3,
  Truncated = 4,
  ChecksumMismatch = 5,
  Malformed = 6,
};

class ModelIoError : public std::runtime_error {
 public:
  ModelIoError(ModelIoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ModelIoErrc code() const noexcept { return code_; }

 private:
  ModelIoErrc code_;
};

std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace scvi
