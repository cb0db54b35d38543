#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bafrcnn/tensor/parameter.hpp"

namespace bafrcnn::tensor {

// Checkpoint layout, all integers little-endian u32:
//   "BGDT" | version | count | { name_len | name (UTF-8) | rank | extents... | f32 values... }*

inline constexpr std::uint32_t kSnapshotVersion = 1;

std::vector<std::uint8_t> encode_snapshot(std::span<const Parameter<float>> tensors);
std::vector<Parameter<float>> decode_snapshot(std::span<const std::uint8_t> bytes);

void save_snapshot(const std::filesystem::path& path, std::span<const Parameter<float>> tensors);
std::vector<Parameter<float>> load_snapshot(const std::filesystem::path& path);

}  // namespace bafrcnn::tensor
