#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sisl/encoder.hpp"

namespace sisl {

/// Layout (little-endian):
///   "SISLMODL" | u32 format_version | u64 training_steps | u32 len + canonical config text
///   | u32 array count | per array: u32 len + name, u32 rank, u32 dims[rank], f32 values
///   | u64 FNV-1a checksum of every byte after the version field.
std::vector<std::uint8_t> serialize_model(const ModelState& model);
ModelState deserialize_model(const std::vector<std::uint8_t>& bytes, const std::string& what = "model");

void save_model(const ModelState& model, const std::filesystem::path& path);
/// Throws DataError on bad magic, newer format version or checksum mismatch.
ModelState load_model(const std::filesystem::path& path);

/// Same container for auxiliary named arrays (optimizer moments), magic "SISLARRS".
void save_named_arrays(const std::map<std::string, NamedArray>& arrays, std::uint64_t counter,
                       const std::filesystem::path& path);
std::map<std::string, NamedArray> load_named_arrays(const std::filesystem::path& path, std::uint64_t& counter);

}  // namespace sisl
