#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epf/graph.hpp"

namespace epf {

inline constexpr std::string_view kModelFormat = "epf-model/1";

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian IEEE-754 binary64 encoding of a tensor's values.
std::string encode_values(std::span<const double> values);
std::vector<double> decode_values(std::string_view text);

/// JSON document: format tag, input shape, seed, and the layer list with
/// hyper-settings and base64 parameter blobs.
std::string model_to_json(const ModelGraph& model);
ModelGraph model_from_json(std::string_view text);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace epf
