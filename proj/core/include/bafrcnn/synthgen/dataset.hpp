#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bafrcnn/common/domain.hpp"
#include "bafrcnn/detector/types.hpp"
#include "bafrcnn/synthgen/config.hpp"

namespace bafrcnn::synthgen {

/// Image file: "XBG1", u32 H, u32 W, u32 C=1, then H*W little-endian float32.
void write_image(const std::filesystem::path& path, std::size_t height, std::size_t width,
                 std::span<const float> pixels);
std::vector<float> read_image(const std::filesystem::path& path, std::size_t* height = nullptr,
                              std::size_t* width = nullptr);
std::vector<std::uint8_t> encode_image(std::size_t height, std::size_t width, std::span<const float> pixels);
std::vector<float> decode_image(std::span<const std::uint8_t> bytes, std::size_t* height = nullptr,
                                std::size_t* width = nullptr);

struct ManifestSample {
  std::string path;  ///< relative to the manifest's directory
  std::uint64_t seed = 0;
  std::vector<detector::Annotation> annotations;
};

struct DatasetManifest {
  int version = 1;
  std::string config_hash;
  Domain domain = Domain::kHC;
  std::string split;           ///< "train" or "test"
  std::string kind = "scene";  ///< "probe" for SOC-style images with threats
  std::vector<ManifestSample> samples;

  /// HC entries need >= 1 annotation; SOC scene entries need none.
  void validate() const;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct DatasetCounts {
  std::size_t hc_train = 2000;
  std::size_t soc_train = 10000;
  std::size_t hc_test = 400;
  std::size_t soc_test = 500;
  std::size_t probe = 400;
};

void to_json(nlohmann::json& j, const DatasetCounts& c);
void from_json(const nlohmann::json& j, DatasetCounts& c);

/// Manifest names written by generate_dataset, in index order.
inline constexpr const char* kSubsetNames[] = {"hc_train", "soc_train", "hc_test", "soc_test", "probe"};

/// Sample i of the whole dataset (subsets concatenated in kSubsetNames order) uses seed base_seed ^ i.
std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t global_index) noexcept;

/// Writes <out>/<subset>/<index>.xbg and <out>/<subset>.json for every subset.
/// Generation is pure per sample, so any thread count yields identical bytes.
/// On failure, every file and directory created by this call is removed.
std::vector<DatasetManifest> generate_dataset(const SynthConfig& config, const DatasetCounts& counts,
                                              std::uint64_t base_seed, const std::filesystem::path& out_dir,
                                              std::size_t threads = 1);

/// gen-data input: {"synth": {...}, "counts": {...}, "threads": n}. Omitted
/// keys keep their defaults; unknown top-level keys are rejected.
struct GenerationConfig {
  SynthConfig synth;
  DatasetCounts counts;
  std::size_t threads = 1;
};

void to_json(nlohmann::json& j, const GenerationConfig& c);
/// Throws ValidationError on malformed JSON, unknown keys or invalid values.
GenerationConfig load_generation_config(const std::filesystem::path& path);

struct LoadedDataset {
  DatasetManifest manifest;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::vector<float>> images;
};

/// Reads a manifest and all of its images; checks extents agree.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace bafrcnn::synthgen
